#!/usr/bin/env python3
"""Aggregating units: independent portfolios and a common intensity factor.

Independent units add their exponents on the cut, so two half-intensity
copies of a unit reproduce the full unit exactly.  A discrete factor that
scales all intensities together fattens the portfolio tail.
"""

from __future__ import annotations

from heavytail import (
    CompoundModel,
    Frequency,
    ParetoTail,
    Portfolio,
    SplicedSeverity,
    UniformBody,
    VarQuery,
    solve_var,
    tail,
)


def unit(rate, omega=0.35, alpha=2.2, x0=1e5, lo=4e4):
    return CompoundModel(SplicedSeverity(omega, x0, UniformBody(lo, x0), ParetoTail(alpha, x0)), Frequency(rate))


def main() -> None:
    s = 2e7
    one = tail(unit(20.0), s).prob
    two = tail(Portfolio((unit(10.0), unit(10.0))), s).prob
    print(f"one unit, rate 20:      {one:.12e}")
    print(f"two units, rate 10+10:  {two:.12e}")

    a, b = unit(20.0), unit(10.0, omega=0.2, alpha=1.8, x0=5e4, lo=1e4)
    indep = Portfolio((a, b))
    # two factor states, equally likely: quiet years and busy years
    mixed = Portfolio((a, b), factor_weights=(0.5, 0.5), factor_scales=((0.5, 0.5), (1.5, 1.5)))
    for label, p in (("unit A alone", a), ("A + B independent", indep), ("A + B with factor", mixed)):
        v = solve_var(VarQuery(p, 0.999)).var
        print(f"{label:<20} VaR(0.999) = {v:.6g}")


if __name__ == "__main__":
    main()
