"""Reference values for ring functions, by 40-digit quadrature of the same
integrands the Rust code uses, cross-checked against mpmath's hypergeometric
legenp/legenq (type 3).  Run: python3 generate_ring_golden.py > ring_golden.json
"""
import json
import mpmath as mp

mp.mp.dps = 40


def gamma_quotient(a, b):
    return mp.gamma(a + mp.mpf(1) / 2) / mp.gamma(b + mp.mpf(1) / 2)


def ring_p(m, n, z):
    s = mp.sqrt(z * z - 1)
    f = lambda t: mp.cos(m * t) / (z + s * mp.cos(t)) ** (n + mp.mpf(1) / 2)
    return (-1) ** m * gamma_quotient(n, n - m) / (2 * mp.pi) * mp.quad(f, [0, mp.pi, 2 * mp.pi])


def ring_q(m, n, z):
    if n + 0.5 > abs(m):
        s = mp.sqrt(z * z - 1)
        f = lambda t: mp.cosh(m * t) / (z + s * mp.cosh(t)) ** (n + mp.mpf(1) / 2)
        return (-1) ** m * gamma_quotient(n, n - m) * mp.quad(f, [0, 1, 10, mp.inf])
    f = lambda t: (z - mp.cos(t)) ** (m - mp.mpf(1) / 2) * mp.cos(n * t)
    pref = gamma_quotient(n + m, n - m) / (mp.sqrt(2) * gamma_quotient(m, 0))
    return pref * (z * z - 1) ** (-mp.mpf(m) / 2) * mp.quad(f, [0, mp.pi])


cases = [("P", 1, 0, 2.0), ("Q", 2, 1, 3.0), ("P", 0, 0, 1.25), ("Q", 0, 0, 1.25),
         ("P", -3, 2, 1.05), ("Q", 4, -6, 10.0), ("P", 4, 0, 10.0), ("Q", -1, 3, 1.5)]
out = []
for kind, m, n, z in cases:
    z = mp.mpf(z)
    v = ring_p(m, n, z) if kind == "P" else ring_q(m, n, z)
    ref = mp.legenp(n - 0.5, m, z, type=3) if kind == "P" else mp.re(mp.legenq(n - 0.5, m, z, type=3))
    assert abs(v - ref) <= mp.mpf(10) ** -30 * max(1, abs(ref)), (kind, m, n, v, ref)
    out.append({"kind": kind, "m": m, "n": n, "z": float(z), "value": mp.nstr(v, 25)})
print(json.dumps(out, indent=1))
