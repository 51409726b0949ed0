"""Independent reference values for the statistics tests.

Everything here is computed with exact rationals where possible and mpmath at
60 significant digits otherwise. Re-running overwrites the frozen CSV fixtures:

    python3 tests/oracle/gen_fixtures.py
"""

import csv
from fractions import Fraction
from itertools import groupby
from pathlib import Path

import mpmath as mp
import numpy as np

mp.mp.dps = 60
OUT = Path(__file__).resolve().parent.parent / "fixtures"


def rnd(values, places=3):
    return [round(float(v), places) for v in values]


def frac(values):
    return [Fraction(repr(v)) for v in values]


def t_two_tailed(t, df):
    t = mp.mpf(t)
    return mp.betainc(mp.mpf(df) / 2, mp.mpf(1) / 2, 0, df / (df + t * t), regularized=True)


def t_cdf(t, df):
    tail = t_two_tailed(t, df) / 2
    return 1 - tail if t > 0 else tail


def normal_cdf(z):
    return mp.ncdf(mp.mpf(z))


def pearson(x, y):
    n = len(x)
    xs, ys = frac(x), frac(y)
    mx, my = sum(xs) / n, sum(ys) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(xs, ys))
    sxx = sum((a - mx) ** 2 for a in xs)
    syy = sum((b - my) ** 2 for b in ys)
    r = mp.mpf(sxy.numerator) / sxy.denominator / mp.sqrt(mp.mpf(sxx.numerator) / sxx.denominator * mp.mpf(syy.numerator) / syy.denominator)
    t = r * mp.sqrt((n - 2) / (1 - r * r))
    return r, t_two_tailed(t, n - 2)


def zscore(col):
    n = len(col)
    v = [mp.mpf(c.numerator) / c.denominator for c in frac(col)]
    m = mp.fsum(v) / n
    sd = mp.sqrt(mp.fsum((a - m) ** 2 for a in v) / (n - 1))
    return [(a - m) / sd for a in v]


def ols(columns, y, standardized):
    n, p = len(y), len(columns)
    if standardized:
        cols = [zscore(c) for c in columns]
        yv = zscore(y)
    else:
        cols = [[mp.mpf(c.numerator) / c.denominator for c in frac(col)] for col in columns]
        yv = [mp.mpf(c.numerator) / c.denominator for c in frac(y)]
    X = mp.matrix(n, p + 1)
    for i in range(n):
        X[i, 0] = 1
        for j in range(p):
            X[i, j + 1] = cols[j][i]
    Y = mp.matrix(yv)
    xtx_inv = mp.inverse(X.T * X)
    beta = xtx_inv * (X.T * Y)
    resid = Y - X * beta
    df = n - p - 1
    s2 = mp.fsum(resid[i] ** 2 for i in range(n)) / df
    ybar = mp.fsum(yv) / n
    sst = mp.fsum((a - ybar) ** 2 for a in yv)
    r2 = 1 - mp.fsum(resid[i] ** 2 for i in range(n)) / sst
    out = []
    for j in range(p + 1):
        se = mp.sqrt(s2 * xtx_inv[j, j])
        t = beta[j] / se
        out.append({"beta": float(beta[j]), "se": float(se), "t": float(t), "p": float(t_two_tailed(t, df))})
    return {"intercept": out[0], "coefficients": out[1:], "r_squared": float(r2), "df_residual": df}


def kolmogorov_sf(lam):
    lam = mp.mpf(lam)
    if lam == 0:
        return mp.mpf(1)
    return 2 * mp.nsum(lambda k: (-1) ** (k - 1) * mp.exp(-2 * k * k * lam * lam), [1, mp.inf])


def ks(a, b):
    fa, fb = sorted(frac(a)), sorted(frac(b))
    n1, n2 = len(fa), len(fb)
    d = Fraction(0)
    for v in sorted(set(fa) | set(fb)):
        ca = Fraction(sum(1 for x in fa if x <= v), n1)
        cb = Fraction(sum(1 for x in fb if x <= v), n2)
        d = max(d, abs(ca - cb))
    lam = mp.sqrt(mp.mpf(n1 * n2) / (n1 + n2)) * mp.mpf(d.numerator) / d.denominator
    p = mp.mpf(1) if d == 0 else min(mp.mpf(1), max(mp.mpf(0), kolmogorov_sf(lam)))
    return d, p


def midranks(values):
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [Fraction(0)] * len(values)
    pos = 0
    ties = []
    for _, grp in groupby(order, key=lambda i: values[i]):
        grp = list(grp)
        lo, hi = pos + 1, pos + len(grp)
        for i in grp:
            ranks[i] = Fraction(lo + hi, 2)
        ties.append(len(grp))
        pos = hi
    return ranks, ties


def mwu(a, b):
    fa, fb = frac(a), frac(b)
    n1, n2 = len(fa), len(fb)
    ranks, ties = midranks(fa + fb)
    u = sum(ranks[:n1]) - Fraction(n1 * (n1 + 1), 2)
    mean = Fraction(n1 * n2, 2)
    # Exact: distribution of the rank sum of n1 items drawn from the pooled midranks.
    dist = {(0, Fraction(0)): 1}
    for r in ranks:
        nxt = dict(dist)
        for (c, s), cnt in dist.items():
            if c < n1:
                key = (c + 1, s + r)
                nxt[key] = nxt.get(key, 0) + cnt
        dist = nxt
    total = extreme = 0
    for (c, s), cnt in dist.items():
        if c != n1:
            continue
        uu = s - Fraction(n1 * (n1 + 1), 2)
        total += cnt
        if abs(uu - mean) >= abs(u - mean):
            extreme += cnt
    p_exact = Fraction(extreme, total)
    n = n1 + n2
    tie_term = sum(t ** 3 - t for t in ties)
    var = mp.mpf(n1 * n2) / 12 * ((n + 1) - mp.mpf(tie_term) / (n * (n - 1)))
    dev = max(mp.mpf(0), abs(mp.mpf(u.numerator) / u.denominator - mp.mpf(mean.numerator) / mean.denominator) - mp.mpf("0.5"))
    p_normal = 2 * (1 - normal_cdf(dev / mp.sqrt(var)))
    return u, float(p_exact), float(p_normal)


def make_datasets():
    specs = [
        (11, "moderate positive", 0.5, False),
        (23, "strong positive, integer ratings with ties", 0.9, True),
        (37, "near zero", 0.0, False),
        (41, "negative, heavy ties", -0.6, True),
        (59, "heavy tailed", 0.3, False),
    ]
    out = []
    for seed, name, rho, integer in specs:
        g = np.random.default_rng(seed)
        n = 20
        x1 = g.normal(size=n)
        x2 = 0.4 * x1 + g.normal(size=n)
        x3 = g.standard_t(3, size=n) if "heavy" in name else g.normal(size=n)
        y = rho * x1 + 0.3 * x2 - 0.2 * x3 + np.sqrt(max(1e-3, 1 - rho * rho)) * g.normal(size=n)
        if integer:
            a = g.integers(1, 5, size=n)
            b = np.clip(a + g.integers(-1, 2, size=n) + (1 if rho > 0 else 0), 1, 4)
        else:
            a = g.normal(0.0, 1.0, size=n)
            b = g.normal(0.6, 1.2, size=n)
        out.append({
            "name": name,
            "x": rnd(x1), "x2": rnd(x2), "x3": rnd(x3), "y": rnd(y),
            "a": rnd(a), "b": rnd(b),
        })
    return out


def golden():
    datasets = []
    for ds in make_datasets():
        r, p = pearson(ds["x"], ds["y"])
        d, ks_p = ks(ds["a"], ds["b"])
        u, mw_exact, mw_normal = mwu(ds["a"], ds["b"])
        cols = [ds["x"], ds["x2"], ds["x3"]]
        ds["expected"] = {
            "pearson": {"r": float(r), "p": float(p)},
            "ols_standardized": ols(cols, ds["y"], True),
            "ols_raw": ols(cols, ds["y"], False),
            "ks": {"d": float(mp.mpf(d.numerator) / d.denominator), "d_num": d.numerator, "d_den": d.denominator, "p": float(ks_p)},
            "mwu": {"u": float(u), "p_exact": mw_exact, "p_normal": mw_normal},
        }
        datasets.append(ds)
    return {"schema": "discern.golden_stats/1", "generator": "tests/oracle/gen_fixtures.py", "datasets": datasets}


def probes():
    t_points = [(-3.5, 4), (-2.1, 10), (-1.0, 1), (-0.3, 2.5), (0.0, 7), (0.7, 30), (1.96, 334), (2.5, 18), (4.2, 3), (6.0, 100)]
    z_points = [-6.0, -3.2, -1.96, -1.0, -0.25, 0.0, 0.5, 1.644853626951, 2.8, 5.5]
    return {
        "schema": "discern.special_probes/1",
        "student_t_cdf": [{"t": t, "df": df, "cdf": float(t_cdf(mp.mpf(t), mp.mpf(df)))} for t, df in t_points],
        "normal_cdf": [{"z": z, "cdf": float(normal_cdf(z))} for z in z_points],
    }


def flatten(prefix, value, out):
    if isinstance(value, dict):
        for k, v in value.items():
            flatten(f"{prefix}.{k}" if prefix else k, v, out)
    elif isinstance(value, list):
        for i, v in enumerate(value):
            flatten(f"{prefix}.{i}", v, out)
    else:
        out.append((prefix, value))


def write_csv(path, header, rows, comment):
    with open(path, "w", newline="") as f:
        f.write(f"# {comment}\n")
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    g = golden()
    data_rows, expected_rows = [], []
    for k, ds in enumerate(g["datasets"]):
        for i in range(len(ds["x"])):
            data_rows.append([k, i] + [repr(ds[c][i]) for c in ("x", "x2", "x3", "y", "a", "b")])
        flat = []
        flatten("", ds["expected"], flat)
        expected_rows += [[k, key, repr(v)] for key, v in flat]
    note = "generated by tests/oracle/gen_fixtures.py"
    write_csv(OUT / "golden_data.csv", ["dataset", "i", "x", "x2", "x3", "y", "a", "b"], data_rows, note)
    write_csv(OUT / "golden_expected.csv", ["dataset", "quantity", "value"], expected_rows, note)
    pr = probes()
    rows = [["student_t_cdf", repr(e["t"]), repr(e["df"]), repr(e["cdf"])] for e in pr["student_t_cdf"]]
    rows += [["normal_cdf", repr(e["z"]), "", repr(e["cdf"])] for e in pr["normal_cdf"]]
    write_csv(OUT / "special_probes.csv", ["function", "x", "df", "cdf"], rows, note)


if __name__ == "__main__":
    main()
