# coding: utf-8

# # Searching mirror-symmetric couplings for large X_BI
#
# Fields and couplings are tied across the left-right mirror, which leaves six
# field orbits and seven coupling orbits on the ladder.

# In[1]:

from bellforge.optimize import (enumerate_orbits, exhaustive_max, hexagon_grid, hill_climb,
                                landscape_slice, orbit_labels, paper_grid)


# In[2]:

space = paper_grid()
fields, couplings, n = enumerate_orbits(space)
print("field orbits:   ", orbit_labels(space)[0])
print("coupling orbits:", orbit_labels(space)[1])
print("grid points:", n)


# A hundred seeded hill climbs find the best point in well under a second.
# (`exhaustive_max(space)` confirms it but takes a few minutes on one core.)

# In[3]:

res = hill_climb(space, seed=0, restarts=100)
print("best X_BI:", res.best_x)
print("fields:   ", dict(zip(orbit_labels(space)[0], res.assignment.fields)))
print("couplings:", dict(zip(orbit_labels(space)[1], res.assignment.couplings)))


# One coupling orbit varied with everything else held at the optimum:

# In[4]:

for value, x in landscape_slice(space, res.assignment, "J:4-7"):
    print(f"J(4-7) = {value:.0f}  X_BI = {x:.5f}")


# The six-spin ring is small enough for a full sweep, signed couplings
# included.

# In[5]:

hexa = exhaustive_max(hexagon_grid())
print("ring maximum:", hexa.best_x, hexa.assignment)
