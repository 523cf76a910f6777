import numpy as np


def central_diff(f, params: dict, eps: float = 1e-6) -> dict:
    """Central finite differences of scalar f() w.r.t. every entry of every array in params."""
    out = {}
    for name, arr in params.items():
        g = np.zeros_like(arr, dtype=float)
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            i = it.multi_index
            old = arr[i]
            arr[i] = old + eps
            up = f()
            arr[i] = old - eps
            down = f()
            arr[i] = old
            g[i] = (up - down) / (2 * eps)
        out[name] = g
    return out


def max_rel_err(a: dict, b: dict, floor: float = 1e-6) -> float:
    worst = 0.0
    for k in a:
        num = np.abs(a[k] - b[k])
        den = np.maximum(np.maximum(np.abs(a[k]), np.abs(b[k])), floor)
        worst = max(worst, float((num / den).max()))
    return worst
