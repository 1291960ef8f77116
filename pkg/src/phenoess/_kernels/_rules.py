"""Fixed quadrature rules shared by both kernel backends."""
import numpy as np

# Gauss-Kronrod 15 nodes on [-1, 1] and the embedded 7-point Gauss weights.
_XK_HALF = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WK_HALF = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG_HALF = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

GK_NODES = np.concatenate([-_XK_HALF[:-1], _XK_HALF[::-1]])
GK_WEIGHTS = np.concatenate([_WK_HALF[:-1], _WK_HALF[::-1]])
# Gauss weights aligned with GK_NODES (zero on Kronrod-only nodes).
GAUSS_WEIGHTS = np.zeros(15)
GAUSS_WEIGHTS[[1, 3, 5]] = _WG_HALF[:3]
GAUSS_WEIGHTS[7] = _WG_HALF[3]
GAUSS_WEIGHTS[[13, 11, 9]] = _WG_HALF[:3]

GL_NODES, GL_WEIGHTS = np.polynomial.legendre.leggauss(8)

# Widest log-space panel handed to a single GK15 evaluation before adaptivity.
LOG_PANEL = 2.0
# Largest exponent swing a(1-p)*dF allowed inside one Gauss-Legendre subpanel.
EXP_SWING = 0.5
