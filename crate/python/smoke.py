"""Quick check that the extension imports and its main entry points run."""

import math

import anosov


def main():
    model = anosov.Surface.model()
    assert model.genus == 3 and model.tube_count == 2, model

    x = model.state("bottom0", [0.1, 0.2], angle=0.7)
    end = model.flow(x, 5.0)
    assert abs(end["det"] - 1.0) < 1e-6, end["det"]
    print("flow:", end["state"], "det - 1 =", end["det"] - 1.0)

    lam = model.lyapunov(x, 100.0)
    assert lam > 0.0, lam
    print("lyapunov exponent over T=100:", lam)

    gb = model.gauss_bonnet()
    assert abs(gb["integral"] + 8 * math.pi) < 0.01 * 8 * math.pi, gb
    print("total curvature:", gb["integral"])

    report = model.cone_scan(spatial=(4, 4), angular=8)
    print("coarse cone scan: c* =", report["max_delta_theta"], "violations:", len(report["violations"]))

    sphere = anosov.Surface.sphere_band()
    t = sphere.conjugate_time(anosov.State("tube0", [0.0, 0.0], [0.0, 1.0]), 5.0)
    assert abs(t - math.pi) < 1e-6, t

    empty = anosov.horizon_bound(disks=[])
    assert empty["violated"] and empty["corridor_witness"] is not None

    assert anosov.periodicity(3.0) == (9, 3)
    assert anosov.embedded_genus(9, 3) == 55
    assert anosov.periodicity(3.0, schedule="sqrt2_ratio") is None

    rows = anosov.convergence([10.0, 20.0])["rows"]
    print("sup0 ratio for s = 10 -> 20:", rows[1]["sup0"] / rows[0]["sup0"])

    try:
        anosov.Surface.model(disks=[((0.5, 0.5), 0.6)])
    except ValueError as e:
        print("rejected oversized disk:", e)
    else:
        raise AssertionError("oversized disk accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
