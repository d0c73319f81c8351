"""Regenerate the 62-tap discrete Meyer approximation in ``_filters.py``.

The Meyer scaling filter is sampled by quadrature, truncated to 62 taps and
then moved to the nearest point satisfying double-shift orthonormality and
a zero at Nyquist (SLSQP, polished by Gauss-Newton projection).

    python tools/make_dmey.py
"""
import numpy as np
from scipy.integrate import quad
from scipy.optimize import minimize

L = 62


def nu(x):
    x = np.clip(x, 0.0, 1.0)
    return x**4 * (35 - 84 * x + 70 * x**2 - 20 * x**3)


def meyer_response(w):
    w = abs(w)
    if w <= np.pi / 3:
        return np.sqrt(2)
    if w >= 2 * np.pi / 3:
        return 0.0
    return np.sqrt(2) * np.cos(np.pi / 2 * nu(3 * w / np.pi - 1))


def truncated_meyer():
    c = (L - 1) / 2
    return np.array([
        quad(lambda w: meyer_response(w) * np.cos(w * (n - c)), 0, np.pi,
             limit=200, epsabs=1e-14)[0] / np.pi
        for n in range(L)
    ])


def constraints(h):
    r = [np.dot(h[2 * m:], h[:L - 2 * m]) - (m == 0) for m in range(L // 2)]
    r.append(np.sum(h * (-1.0) ** np.arange(L)))
    return np.array(r)


def constraints_jac(h):
    J = np.zeros((L // 2 + 1, L))
    for m in range(L // 2):
        J[m, 2 * m:] += h[:L - 2 * m]
        J[m, :L - 2 * m] += h[2 * m:]
    J[-1] = (-1.0) ** np.arange(L)
    return J


def project(h, iters=30):
    for _ in range(iters):
        r = constraints(h)
        if np.abs(r).max() < 1e-16:
            break
        h = h + np.linalg.lstsq(constraints_jac(h), -r, rcond=None)[0]
    return h


def main():
    hm = truncated_meyer()
    h0 = project(hm.copy())
    res = minimize(lambda x: np.sum((x - hm) ** 2), h0,
                   jac=lambda x: 2 * (x - hm),
                   constraints=[{"type": "eq", "fun": constraints,
                                 "jac": constraints_jac}],
                   method="SLSQP", options={"ftol": 1e-16, "maxiter": 2000})
    h = project(res.x)
    print("max constraint violation", np.abs(constraints(h)).max())
    print("max distance to truncated Meyer", np.abs(h - hm).max())
    print("DMEY_LO = (")
    for v in h:
        print(f"    {float(v)!r},")
    print(")")


if __name__ == "__main__":
    main()
