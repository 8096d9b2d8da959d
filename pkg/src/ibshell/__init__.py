"""Immersed-boundary simulation of an elastic shell in a periodic viscous fluid.

Subpackages:

- geometry   : discrete differential geometry of the reference surface
- shell      : coefficient tensors and the elastic force operator
- fluid      : FFT-based implicit step for the periodic Navier-Stokes system
- coupling   : smoothed-delta force spreading and velocity interpolation
- simulation : helicoidal model shell, time loop, snapshots
- harness    : error norms, convergence rates, self-checks
"""

__version__ = "0.1.0"
