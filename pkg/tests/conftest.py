import math

from hypothesis import settings

from fermicurve.states import Grid

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


def gaussian_grid(a, hbar=1.0, n=20001):
    """Symmetric grid on which exp(-a x^2 / 2 hbar) decays far below the mask threshold."""
    L = math.sqrt(42.0 * hbar / a) + 1.0
    return Grid(-L, L, n)


def hermite_grid(N, n=20001):
    L = 7.0 + N / 3.0
    return Grid(-L, L, n)
