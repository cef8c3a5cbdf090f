"""Independent reference implementations used only to check the package.

Everything here deliberately recomputes results by a different route than
the library (scalar loops, finite differences, offline interval walks) so
agreement is meaningful.
"""

import math

import numpy as np

from saedetect.thresholds import TrafficLight


def scalar_dense_forward(weights, biases, x, activation):
    """Double-loop neuron evaluation, no matrix ops."""
    out = []
    for i in range(len(biases)):
        z = biases[i]
        for j in range(len(x)):
            z += weights[i][j] * x[j]
        out.append(math.tanh(z) if activation == "tanh" else z)
    return np.array(out)


def pearson(x, y):
    """Textbook Pearson coefficient via explicit sums."""
    n = len(x)
    mx = sum(x) / n
    my = sum(y) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    return sxy / math.sqrt(sxx * syy)


def fd_gradients(layers, x, y, h=1e-5, coords=None, rng=None):
    """Central finite differences of mse(forward(x), y) per parameter.

    With ``coords`` given (count per tensor), only a seeded random subset of
    coordinates per layer is probed; otherwise every coordinate is.
    Returns [(dW, db)] where unprobed entries are NaN.
    """
    from saedetect.nn import forward_stack, mse

    def loss():
        return mse(forward_stack(layers, x), y)

    out = []
    for layer in layers:
        dW = np.full_like(layer.weights, np.nan)
        db = np.full_like(layer.biases, np.nan)
        if coords is None:
            w_idx = [(i, j) for i in range(dW.shape[0]) for j in range(dW.shape[1])]
            b_idx = list(range(db.shape[0]))
        else:
            w_flat = rng.choice(dW.size, size=min(coords, dW.size), replace=False)
            w_idx = [np.unravel_index(k, dW.shape) for k in w_flat]
            b_idx = list(rng.choice(db.size, size=min(coords, db.size), replace=False))
        for i, j in w_idx:
            orig = layer.weights[i, j]
            layer.weights[i, j] = orig + h
            up = loss()
            layer.weights[i, j] = orig - h
            down = loss()
            layer.weights[i, j] = orig
            dW[i, j] = (up - down) / (2 * h)
        for i in b_idx:
            orig = layer.biases[i]
            layer.biases[i] = orig + h
            up = loss()
            layer.biases[i] = orig - h
            down = loss()
            layer.biases[i] = orig
            db[i] = (up - down) / (2 * h)
        out.append((dW, db))
    return out


def max_relative_gradient_error(analytic, numeric):
    """Worst relative disagreement over the probed coordinates.

    Coordinates where both gradients are tiny (< 1e-8) are compared
    absolutely against 1e-4 instead, since relative error is meaningless
    at that scale.
    """
    worst = 0.0
    for (aw, ab), (nw, nb) in zip(analytic, numeric):
        for a, n in ((aw, nw), (ab, nb)):
            mask = ~np.isnan(n)
            if not mask.any():
                continue
            a = a[mask]
            n = n[mask]
            scale = np.maximum(np.abs(a), np.abs(n))
            tiny = scale < 1e-8
            if tiny.any():
                assert np.all(np.abs(a[tiny] - n[tiny]) < 1e-4)
            big = ~tiny
            if big.any():
                worst = max(worst, float(np.max(np.abs(a[big] - n[big]) / scale[big])))
    return worst


def gating_intervals(bands, window_size, pre, post, red_run, amber_run, stream_len):
    """Offline recomputation of transmission gating from per-window bands.

    Walks the band sequence with the run/alarm rules and unions the
    per-episode intervals [run_start - pre, last_anomaly_end + post); two
    episodes merge exactly when those intervals overlap. Returns (start,
    end) sample intervals clipped to the stream.
    """
    intervals = []
    current = None
    reds = ambers = 0
    run_start = None
    for i, band in enumerate(bands):
        origin = i * window_size
        end = origin + window_size
        if band is TrafficLight.RESTING:
            continue
        if band is TrafficLight.GREEN:
            reds = ambers = 0
            run_start = None
            continue
        if ambers == 0:
            run_start = origin
        ambers += 1
        reds = reds + 1 if band is TrafficLight.RED else 0
        if current is not None and origin < current[1]:
            current[1] = end + post
            continue
        if reds >= red_run or ambers >= amber_run:
            start = run_start - pre
            if current is not None and start < current[1]:
                current[1] = end + post
            else:
                if current is not None:
                    intervals.append(current)
                current = [max(0, start), end + post]
    if current is not None:
        intervals.append(current)
    return [(s, min(e, stream_len)) for s, e in intervals]


def union_length(intervals):
    """Total covered length of possibly-overlapping intervals."""
    total = 0
    last_end = None
    for s, e in sorted(intervals):
        if last_end is None or s >= last_end:
            total += e - s
            last_end = e
        else:
            total += max(0, e - last_end)
            last_end = max(last_end, e)
    return total
