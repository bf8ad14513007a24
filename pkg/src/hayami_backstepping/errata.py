"""Notices for printed formulas that the numerics replace.

Each entry is written into run metadata when the corresponding substitution
is in effect, so output files say which reading was used.
"""

NOTICES: dict[str, str] = {
    "ftcs-coefficient": (
        "explicit update uses D*dt/dx**2 for the diffusion term; the printed "
        "coefficient dt/dx is dimensionally inconsistent"
    ),
    "control-quadrature-factor": (
        "control integral uses the left-rectangle factor dx/D; the printed "
        "discrete law shows dx/(2D)"
    ),
    "weir-height": (
        "X = B v(0,t), hence z_weir = X/B; the alternative X = v(0,t)/B printed "
        "later contradicts the ODE for X"
    ),
    "target-reaction-term": (
        "target PDE read as w_t = D w_xx - (C^2/(4D)) w; a w_x in the last term "
        "is inconsistent with the u equation"
    ),
    "control-gauge-point": "physical boundary flow is U*exp(C/(2D)) (gauge evaluated at x = 1)",
    "gamma-slope-coefficient": (
        "consistent gamma ODE uses gamma' coefficient b/(B*D); the printed b/B "
        "drops a 1/D from the k_y(x,0) term"
    ),
    "delta-ode": (
        "consistent delta ODE is delta'' = ((C^2/(4D) - lambda)/D) delta, the exact "
        "inverse of the consistent gamma; the printed delta'' = (C^2/(4D^2)) delta' "
        "- (lambda/D) delta does not invert the forward map"
    ),
    "printed-kernels": (
        "printed kernel ODEs in use; the closed-form inverse is not exact and "
        "the triangular numerical inverse must be used"
    ),
    "norm-constants": (
        "norm sandwich uses m1,m2 with +1 on the X^2 coefficient, beta5 = 4||delta'||^2 "
        "and m4 = 2 max{1, 1/c1, 1/c2}; the printed m4 = 2 max{1, c1, c2} fails "
        "Gamma_1 <= m4 V whenever c1 < 1"
    ),
    "unit-domain-scaling": (
        "paper-literal mode keeps B0, C0, D0 unchanged on the unit domain; this is "
        "not dimensionally consistent and the CFL step is tiny"
    ),
    "varying-ic": (
        "non-constant initial conditions are a configurable Gaussian bump; the "
        "original varying profile is not specified, so it is not reproduced"
    ),
}


def notices_for(mode: str, form: str, *, certify: bool = False, ic_kind: str | None = None) -> list[str]:
    keys = ["ftcs-coefficient", "control-quadrature-factor", "weir-height",
            "target-reaction-term", "control-gauge-point"]
    if form == "consistent":
        keys += ["gamma-slope-coefficient", "delta-ode"]
    else:
        keys.append("printed-kernels")
    if mode == "paper-literal":
        keys.append("unit-domain-scaling")
    if certify:
        keys.append("norm-constants")
    if ic_kind is not None and ic_kind != "constant":
        keys.append("varying-ic")
    return keys
