"""Input validation helpers shared across the package."""
import numpy as np

UNIT_ATOL = 1e-9


def as_float_array(x, name="array", ndim=None):
    """Coerce to a C-contiguous float64 ndarray, optionally checking ndim."""
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if ndim is not None and arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def check_unit(y, name="y", atol=UNIT_ATOL):
    """Require a unit-norm vector (or rows of unit norm for a 2-d array)."""
    y = as_float_array(y, name)
    norms = np.linalg.norm(y, axis=-1)
    if not np.all(np.abs(norms - 1.0) <= atol):
        worst = float(np.max(np.abs(norms - 1.0)))
        raise ValueError(f"{name} must have unit norm within {atol:g} "
                         f"(max deviation {worst:.3e})")
    return y


def check_unit_blocks(y, block_dim, name="y", atol=UNIT_ATOL):
    """Require every contiguous block of length ``block_dim`` to be unit norm."""
    y = as_float_array(y, name)
    if y.shape[-1] % block_dim != 0:
        raise ValueError(f"{name} length {y.shape[-1]} is not a multiple of "
                         f"block dimension {block_dim}")
    blocks = y.reshape(y.shape[:-1] + (-1, block_dim))
    norms = np.linalg.norm(blocks, axis=-1)
    if not np.all(np.abs(norms - 1.0) <= atol):
        worst = float(np.max(np.abs(norms - 1.0)))
        raise ValueError(f"{name} blocks must have unit norm within {atol:g} "
                         f"(max deviation {worst:.3e})")
    return y


def check_same_dim(a, b, name_a="a", name_b="b"):
    if a.shape[-1] != b.shape[-1]:
        raise ValueError(f"{name_a} and {name_b} disagree in dimension: "
                         f"{a.shape[-1]} vs {b.shape[-1]}")
