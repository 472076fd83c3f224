"""Bundled example data.

The lizard table records 564 observations of two Anolis species in 42
structural-habitat cells: perch height, perch diameter, insolation,
time of day (3 levels) and species, a 2x2x2x3x2 contingency table.
"""

from importlib.resources import as_file, files

from .distribution import DEFAULT_CELL_CAP, JointTable
from .io import read_counts_csv, read_scheme_json


def lizards_path():
    """Filesystem path of the bundled lizard counts CSV."""
    return files("tcherry").joinpath("data/lizards.csv")


def load_lizards(cap: int = DEFAULT_CELL_CAP) -> JointTable:
    """The lizard habitat contingency table as a joint distribution."""
    data = files("tcherry")
    with as_file(data.joinpath("data/lizards.csv")) as csv_path, \
            as_file(data.joinpath("data/lizards.scheme.json")) as scheme_path:
        return read_counts_csv(csv_path, scheme=read_scheme_json(scheme_path), cap=cap)
