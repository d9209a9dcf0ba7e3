import numpy as np
import pytest
from hypothesis import settings

from approx_count import Dataset

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture
def diag3():
    """The three points (1,1), (2,2), (3,3)."""
    return Dataset.from_coords([(1, 1), (2, 2), (3, 3)])


def labelled_line(labels):
    """1-D positions 0..N-1 on the x axis with a fixed label vector."""
    from approx_count.predicates import LabelQuery

    lab = np.asarray(labels, dtype=bool)
    ds = Dataset.from_coords(np.column_stack([np.arange(lab.size, dtype=float), np.zeros(lab.size)]))
    return ds, LabelQuery(ds, lab)
