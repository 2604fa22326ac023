"""Named models, lattices and search spaces available without any input file."""
from .lattice import hexagon6, ladder10
from .models import bb1, dilorenzo
from .optimize import hexagon_grid, paper_grid

MODELS = {"bb1": bb1, "dilorenzo": dilorenzo}
LATTICES = {"ladder10": ladder10, "hexagon6": hexagon6}
SPACES = {"paper-grid": paper_grid, "hexagon6": hexagon_grid}
