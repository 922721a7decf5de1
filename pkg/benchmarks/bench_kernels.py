"""Compare the compiled kernel backend against the pure-numpy fallback.

Times the three hot kernels (intersection projection, best response, full
game) plus the lasso coordinate-descent path on representative workloads and
verifies both backends produce the same numbers.

Run:  python benchmarks/bench_kernels.py
"""
import time

import numpy as np

from linex.solver._kernels import get_backend


def make_games(rng, count=50, k=2, d=4, n=10):
    games = []
    for _ in range(count):
        G = np.empty((k, d, d))
        c = np.empty((k, d))
        steps = np.empty(k)
        for i in range(k):
            X = rng.standard_normal((n, d))
            G[i] = X.T @ X
            c[i] = X.T @ (X @ rng.standard_normal(d))
            steps[i] = 1.0 / (2 * np.linalg.eigvalsh(G[i]).max() * 1.02)
        games.append((G, c, steps))
    return games


def make_projections(rng, count=2000, d=6):
    cases = []
    for _ in range(count):
        v = rng.standard_normal(d) * 3
        s = rng.standard_normal(d)
        gamma = rng.uniform(0.2, 2)
        t = np.maximum(np.abs(s) - gamma, 0).sum() + rng.uniform(0.05, 3)
        cases.append((v, s, gamma, t))
    return cases


def make_paths(rng, count=200, n=10, d=4):
    cases = []
    for _ in range(count):
        Xc = rng.standard_normal((n, d))
        Xc -= Xc.mean(axis=0)
        yc = rng.standard_normal(n)
        yc -= yc.mean()
        w = rng.uniform(0.01, 1.0, n)
        alphas = np.geomspace(1.0, 1e-3, 60)
        cases.append((Xc, yc, w, alphas))
    return cases


def bench(label, fn, repeats=3):
    best = np.inf
    result = None
    for _ in range(repeats):
        start = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - start)
    return best, result


def main():
    rng = np.random.default_rng(0)
    games = make_games(rng)
    projections = make_projections(rng)
    paths = make_paths(rng)

    backends = {"python": get_backend("python")}
    try:
        backends["compiled"] = get_backend("compiled")
    except ImportError:
        print("compiled backend not built; only timing the fallback")

    timings = {}
    outputs = {}
    for name, impl in backends.items():
        t_proj, _ = bench(name, lambda: [
            impl.exact_box_l1_project(v, s, g, t) for v, s, g, t in projections
        ])
        t_game, games_out = bench(name, lambda: [
            impl.run_game(G, c, st, 0.5, 2.0, 1e-7, 500, 400, 1e-10)
            for G, c, st in games
        ])
        t_path, paths_out = bench(name, lambda: [
            impl.lasso_cd_path(Xc, yc, w, al, 1000, 1e-8)
            for Xc, yc, w, al in paths
        ])
        timings[name] = {"projection": t_proj, "game": t_game, "lasso_path": t_path}
        outputs[name] = (games_out, paths_out)

    print(f"{'kernel':<12}" + "".join(f"{n:>12}" for n in timings) +
          ("     speedup" if len(timings) == 2 else ""))
    for kernel in ("projection", "game", "lasso_path"):
        row = f"{kernel:<12}"
        values = [timings[n][kernel] for n in timings]
        row += "".join(f"{v * 1000:>10.1f}ms" for v in values)
        if len(values) == 2:
            row += f"{values[0] / values[1]:>11.1f}x"
        print(row)

    if len(backends) == 2:
        games_a, paths_a = outputs["python"]
        games_b, paths_b = outputs["compiled"]
        for (Wa, *_), (Wb, *_) in zip(games_a, games_b):
            assert np.allclose(Wa, Wb, atol=1e-7), "game outputs diverge between backends"
        for pa, pb in zip(paths_a, paths_b):
            assert np.allclose(pa, pb, atol=1e-8), "lasso paths diverge between backends"
        print("outputs identical across backends (1e-7 game, 1e-8 path)")


if __name__ == "__main__":
    main()
