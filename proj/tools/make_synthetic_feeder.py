#!/usr/bin/env python3
"""Generate the bundled 123-bus synthetic feeder and its calibrated scenarios.

The feeder reproduces the aggregate statistics of the IEEE 123-bus test case
(3000 kW / 1575 kVAr total load, nine 0-100 kW DERs at buses 19, 26, 38, 49,
56, 64, 78, 89, 99, DERs 78 and 89 holding 0.95 pu). Line impedances are
synthetic. Uncontrollable renewable injections for the export scenarios are
calibrated here with a backward/forward sweep that mirrors src/plant.cpp.

Usage: tools/make_synthetic_feeder.py [output_root]
"""
import pathlib
import sys

import numpy as np

N = 122
DERS = [19, 26, 38, 49, 56, 64, 78, 89, 99]
PV_SET = {78: 0.95, 89: 0.95}
V0 = 1.02
S_BASE_KVA = 1000.0
V_BASE_KV = 4.16


def topology():
    parent = {}

    def chain(first, last, root):
        p = root
        for b in range(first, last + 1):
            parent[b] = p
            p = b

    chain(1, 12, 0)      # main trunk
    chain(13, 19, 3)
    chain(20, 26, 5)
    chain(27, 38, 7)
    chain(39, 49, 9)
    chain(50, 56, 10)    # ends with line (55, 56)
    chain(57, 64, 12)
    chain(65, 78, 12)    # second trunk
    chain(79, 89, 70)
    chain(90, 99, 75)
    chain(100, 104, 2)
    chain(105, 109, 15)
    chain(110, 114, 31)
    chain(115, 118, 60)
    chain(119, 122, 84)
    assert sorted(parent) == list(range(1, N + 1))
    return parent


def resistance(bus):
    if bus <= 4:
        return 0.002
    if 13 <= bus <= 64:
        return 0.0008
    return 0.0009


def loads():
    pattern = [20, 40, 10, 35, 25, 30, 15, 45, 20, 30]
    p = np.array([pattern[i % 10] for i in range(N)], float)
    p[56 - 1] = 0.0
    p *= 3000.0 / p.sum()
    p = np.round(p, 2)
    p[0] += round(3000.0 - p.sum(), 2)
    q = np.round(p * 0.525, 2)
    q[0] += round(1575.0 - q.sum(), 2)
    return p, q


class Sweep:
    def __init__(self):
        self.parent = topology()
        self.order = sorted(self.parent)
        self.z = {b: complex(resistance(b), 2.0 * resistance(b)) for b in self.order}
        self.pd, self.qd = loads()

    def solve(self, u, extra):
        pinj = (-self.pd + extra) / S_BASE_KVA
        for i, b in enumerate(DERS):
            pinj[b - 1] += u[i] / S_BASE_KVA
        qinj = -self.qd / S_BASE_KVA
        qpv = {b: 0.0 for b in PV_SET}
        v = np.full(N + 1, V0, complex)

        def inner(v):
            for _ in range(200):
                s = pinj + 1j * qinj
                for b, qq in qpv.items():
                    s[b - 1] += 1j * qq
                inj = np.conj(s / v[1:])
                j = np.zeros(N + 1, complex)
                for b in reversed(self.order):
                    j[b] -= inj[b - 1]
                    if self.parent[b] != 0:
                        j[self.parent[b]] += j[b]
                vn = v.copy()
                vn[0] = V0
                for b in self.order:
                    vn[b] = vn[self.parent[b]] - self.z[b] * j[b]
                done = np.max(np.abs(vn - v)) < 1e-13
                v = vn
                if done:
                    break
            return v, j

        pv = list(PV_SET)

        def path(b):
            s = set()
            while b != 0:
                s.add(b)
                b = self.parent[b]
            return s

        jac = np.array([[sum(self.z[l].imag for l in path(a) & path(c)) for c in pv] for a in pv])
        v, j = inner(v)
        f = np.array([PV_SET[b] - abs(v[b]) for b in pv])
        for _ in range(60):
            if np.max(np.abs(f)) < 1e-12:
                break
            dq = np.linalg.solve(jac, f)
            for i, b in enumerate(pv):
                qpv[b] += dq[i]
            v, j = inner(v)
            fn = np.array([PV_SET[b] - abs(v[b]) for b in pv])
            jac = jac + np.outer(-(fn - f) - jac @ dq, dq) / dq.dot(dq)
            f = fn
        head = sum(j[b] for b in self.order if self.parent[b] == 0)
        return -(v[0] * np.conj(head)).real * S_BASE_KVA


def calibrate(sweep, pattern, y_target):
    def err(s):
        return sweep.solve(np.zeros(len(DERS)), pattern * s) - y_target

    s0, s1 = 0.0, 1.0
    f0, f1 = err(s0), err(s1)
    for _ in range(30):
        s0, s1, f0 = s1, s1 - f1 * (s1 - s0) / (f1 - f0), f1
        f1 = err(s1)
        if abs(f1) < 1e-9:
            break
    return pattern * s1


def write_feeder(path):
    parent = topology()
    p, q = loads()
    with open(path, "w") as out:
        out.write("# Synthetic 123-bus radial feeder (balanced, single-phase equivalent).\n")
        out.write("# Aggregate load 3000 kW / 1575 kVAr; impedances are synthetic.\n")
        out.write("# Generated by tools/make_synthetic_feeder.py\n\n")
        out.write("[base]\n")
        out.write(f"s_base_kva {S_BASE_KVA:g}\n")
        out.write(f"v_base_kv {V_BASE_KV:g}\n\n")
        out.write("[buses]\n# id kind p_load_kw q_load_kvar [v_set_pu]\n")
        out.write(f"0 substation 0 0 {V0:g}\n")
        for b in range(1, N + 1):
            if b in PV_SET:
                out.write(f"{b} der_const_voltage {p[b-1]:g} {q[b-1]:g} {PV_SET[b]:g}\n")
            elif b in DERS:
                out.write(f"{b} der_unity_pf {p[b-1]:g} {q[b-1]:g}\n")
            else:
                out.write(f"{b} load {p[b-1]:g} {q[b-1]:g}\n")
        out.write("\n[lines]\n# id from to r_pu x_pu f_max_kw\n")
        for b in range(1, N + 1):
            r = resistance(b)
            out.write(f"{b} {parent[b]} {b} {r:g} {2 * r:g} inf\n")
        out.write("\n[ders]\n# bus p_min_kw p_max_kw q_min_kvar q_max_kvar\n")
        for b in DERS:
            if b in PV_SET:
                out.write(f"{b} 0 100 -2000 2000\n")
            else:
                out.write(f"{b} 0 100 0 0\n")


def fmt_list(values):
    return "[" + ", ".join(f"{v:.10g}" if isinstance(v, float) else str(v) for v in values) + "]"


def write_scenario(path, title, fields):
    with open(path, "w") as out:
        out.write(f"# {title}\n# Generated by tools/make_synthetic_feeder.py\n\n")
        for key, value in fields:
            if isinstance(value, str):
                out.write(f'{key} = "{value}"\n')
            elif isinstance(value, bool):
                out.write(f"{key} = {'true' if value else 'false'}\n")
            elif isinstance(value, list):
                out.write(f"{key} = {fmt_list(value)}\n")
            else:
                out.write(f"{key} = {value}\n")


def main():
    root = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else pathlib.Path(__file__).parent.parent)
    feeders = root / "data" / "feeders"
    scenarios = root / "data" / "scenarios"
    feeders.mkdir(parents=True, exist_ok=True)
    scenarios.mkdir(parents=True, exist_ok=True)
    write_feeder(feeders / "ieee123_synthetic.feeder")

    sweep = Sweep()
    # Case I: a single small renewable brings the import to -3110 kW.
    case1_bus = 104
    one = np.zeros(N)
    one[case1_bus - 1] = 1.0
    case1 = calibrate(sweep, one, -3110.0)
    # Case II: renewables spread over the laterals and the second trunk.
    spread = np.zeros(N)
    for b in range(13, N + 1):
        if b != 56:
            spread[b - 1] = 1.0
    case2 = calibrate(sweep, spread, 1000.0)
    case2_buses = [b for b in range(1, N + 1) if case2[b - 1] != 0.0]
    case2_kw = [float(case2[b - 1]) for b in case2_buses]

    common = [
        ("feeder", "../feeders/ieee123_synthetic.feeder"),
        ("b_lo", 0.8),
        ("b_hi", 1.2),
        ("beta", 0.02),
        ("epsilon", 0.01),
        ("delta", 1.0),
        ("max_iters", 1000),
        ("phi0", 1.0),
        ("u0", 0.0),
        ("seed", 1),
        ("slow_period", 1000),
        ("n_slow", 0),
        ("fast_dt_ms", 100.0),
    ]
    write_scenario(scenarios / "case1.toml", "Case I: importing from the bulk system, y0 = -3110 kW",
                   [("name", "case1"), *common[:1], ("y_star", -3000.0),
                    ("uncontrollable_bus", [case1_bus]),
                    ("uncontrollable_kw", [float(case1[case1_bus - 1])]), *common[1:]])
    write_scenario(scenarios / "case2.toml", "Case II: exporting to the bulk system, y0 = +1000 kW",
                   [("name", "case2"), *common[:1], ("y_star", 1100.0),
                    ("uncontrollable_bus", case2_buses), ("uncontrollable_kw", case2_kw), *common[1:]])
    write_scenario(scenarios / "case2_8der.toml", "Case II with the DER at bus 99 disconnected",
                   [("name", "case2_8der"), *common[:1], ("y_star", 1100.0),
                    ("uncontrollable_bus", case2_buses), ("uncontrollable_kw", case2_kw),
                    ("exclude_der_buses", [99]), *common[1:]])
    case3 = [(k, v) for k, v in common[1:] if k not in ("n_slow",)]
    write_scenario(scenarios / "case3.toml", "Case III: congestion on line (55, 56) limited to 40 kW",
                   [("name", "case3"), *common[:1], ("y_star", 1500.0),
                    ("uncontrollable_bus", case2_buses), ("uncontrollable_kw", case2_kw),
                    ("line_limit_from", [55]), ("line_limit_to", [56]), ("line_limit_kw", [40.0]),
                    *case3, ("n_slow", 1)])
    print("case1 renewable kW:", case1[case1_bus - 1])
    print("case2 renewable total kW:", sum(case2_kw))


if __name__ == "__main__":
    main()
