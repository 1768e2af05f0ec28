"""
MIT License

Copyright (c) 2024-present ressf developers

Permission is hereby granted, free of charge, to any person obtaining a copy
of this software and associated documentation files (the "Software"), to deal
in the Software without restriction, including without limitation the rights
to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
copies of the Software, and to permit persons to whom the Software is
furnished to do so, subject to the following conditions:

The above copyright notice and this permission notice shall be included in all
copies or substantial portions of the Software.

THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
SOFTWARE.
"""

from typing import Final

# model
HERMITIAN_TOL: Final[float] = 1e-12
GAP_TOL_FACTOR: Final[float] = 1e-8  # times the spectral diameter of H_r
SIGNATURE_TOL: Final[float] = 1e-10
MACHINE_NOISE: Final[float] = 1e-14

# transfer
RESOLVENT_RESIDUAL: Final[float] = 1e-10
POLE_EXCLUSION: Final[float] = 1e-10  # relative distance of s to a pole

# poles
CLUSTER_GAP: Final[float] = 1e-6  # relative
ZERO_EIGENVALUE_TOL: Final[float] = 1e-12  # times ||T||
REAL_AXIS_TOL: Final[float] = 1e-9  # relative imaginary part of a real pole
Y_SCHEDULE_FACTOR: Final[float] = 1e-2
Y_SCHEDULE_MAX_HALVINGS: Final[int] = 40
Y_SCHEDULE_STABLE: Final[int] = 3
RIESZ_NODES: Final[int] = 64
RIESZ_MAX_NODES: Final[int] = 4096
RIESZ_TOL: Final[float] = 1e-10
REGULARIZING_OFFSETS: Final[tuple] = (
    0.5, -0.5, 0.25, -0.25, 0.75, -0.75, 1.0, -1.0, 1.5, -1.5, 2.0, -2.0, 0.125, -0.125,
)

# ssf / contours
RESIDUE_NODES: Final[int] = 64
RESIDUE_MAX_NODES: Final[int] = 8192
RESIDUE_TOL: Final[float] = 1e-12
GL_NODES: Final[int] = 16
GL_LOCAL_TOL: Final[float] = 1e-10
GL_MAX_DEPTH: Final[int] = 40
EXCLUSION_TOL: Final[float] = 1e-3  # relative to contour radius
RICHARDSON_AGREEMENT: Final[float] = 1e-7
RICHARDSON_STABLE: Final[int] = 3
RICHARDSON_MAX_LEVELS: Final[int] = 16
QUAD_LIMIT: Final[int] = 400
QUAD_EPSABS: Final[float] = 1e-12
QUAD_PEAK_WIDTHS: Final[tuple] = (-8.0, -2.0, -0.5, 0.0, 0.5, 2.0, 8.0)  # breakpoints, in units of |Im p|
LARGE_COUPLING_TOL: Final[float] = 1e-6
NON_RESONANT_STEPS: Final[int] = 1000
DECOMPOSITION_TOL: Final[float] = 1e-6  # |xi - xi_a - sum of jumps|
INTEGER_TOL: Final[float] = 1e-6

# oracles
FLOW_GRID: Final[int] = 400
FLOW_BISECTION_WIDTH: Final[float] = 1e-10
COUNT_TOL: Final[float] = 1e-10
KREIN_REAL_TOL: Final[float] = 1e-10
ARGUMENT_RESIDUAL: Final[float] = 1e-6

# cantor
GUARD_FACTOR: Final[float] = 1e-3  # times the shortest removed interval
SAMPLE_MARGIN: Final[float] = 0.25  # samples stay in the middle half of a K_d piece
CANTOR_TRACK_LEVELS: Final[int] = 80  # halvings of y while tracking the pole
CANTOR_TRACK_TOL: Final[float] = 1e-10  # relative

# reports
CSV_SCHEMA_VERSION: Final[str] = "1"
