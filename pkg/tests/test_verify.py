from thermgrid.verify import run_all


def test_oracle_suite_passes_quickly():
    results, seconds = run_all()
    names = {r.name for r in results}
    for expected in ("linear slab profile", "series slab interface", "heated slab refinement ratio",
                     "adiabatic cube heating", "bath decay per step", "electrical bar potential",
                     "electrical bar Joule density", "electrical bar Joule power", "held source reaches steady",
                     "heated pillar layer chain", "heated pillar monotone in z", "face conductance 13|167",
                     "5x5 SPD against dense solve"):
        assert expected in names
    failed = [r.line() for r in results if not r.passed]
    assert not failed, failed
    assert seconds < 10.0
