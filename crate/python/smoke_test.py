"""Smoke test for the bellpbr Python bindings.

Build and install first, e.g.

    cd crates/python && maturin build --release && pip install ../../target/wheels/bellpbr_py-*.whl
"""

import math

import bellpbr_py as bp


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} vs {b}"


def main():
    sc = bp.Scenario(2, 2, 2)
    assert sc.result_space_size() == 16
    assert sc.encode([1, 2], [1, 0]) == 6
    assert sc.decode(15) == ([2, 2], [1, 1])

    chsh = bp.Distribution.quantum("chsh:0.7854")
    close(sum(chsh.probs), 1.0, 1e-12)
    close(chsh.expectation("chsh"), 2 * math.sqrt(2), 1e-9)
    rate, weights = bp.gain_spbr(chsh, "chsh")
    close(rate, bp.gain_martingale(2 * math.sqrt(2), 4, -4, 2), 1e-9)
    assert len(weights) == 2

    q = bp.Distribution.quantum("cglmp:3")
    g_mart = bp.gain_martingale(q.expectation("cglmp:3"), 4, -4, 2)
    g_spbr, _ = bp.gain_spbr(q, "cglmp:3")
    s_q = bp.optimal_gain(q)
    close(g_mart, 0.0565, 5e-4)
    close(g_spbr, 0.0675, 5e-4)
    close(s_q, g_spbr, 1e-3)

    divergence, projected, mixture = bp.kl_project_lr(q)
    close(divergence, s_q, 1e-12)
    close(sum(mixture), 1.0, 1e-9)
    assert len(projected.probs) == 36

    close(bp.pbr_pvalue(10.0), 2.0 ** -10, 0)
    close(bp.martingale_pvalue(4.0, 10, 4, -4, 2), 0.75 ** 10, 1e-15)
    assert bp.martingale_pvalue(2.5, 100, 4, -4, 2) <= bp.azuma_pvalue(2.5, 100, 4, -4, 2)

    trials = q.sample(3000, 7)
    assert trials == q.sample(3000, 7)
    report = bp.analyze(trials, q.scenario, "spbr", block=154)
    assert report["n"] == 3000 and 0 < report["p_value"] < 1e-20
    assert len(report["rows"]) == 3000

    engine = bp.SimplifiedPbr(q.scenario, "cglmp:3", block=154)
    for settings, outcomes in trials:
        n, log2_t, p = engine.push(settings, outcomes)
    close(log2_t, -report["log2_p"], 1e-9)

    try:
        bp.analyze(trials, q.scenario, "spbr", functions="mermin")
    except ValueError as err:
        assert "mermin" in str(err)
    else:
        raise AssertionError("unknown functional accepted")

    summary = bp.simulate("cglmp:3", trials=2000, seed=1)
    assert set(summary) == {"mart", "spbr", "fpbr"}
    close(summary["spbr"]["rate"], g_spbr, 1e-9)

    names = [name for name, *_ in bp.functionals("nosignaling", sc)]
    assert len(names) == 16
    print("python smoke test passed")


if __name__ == "__main__":
    main()
