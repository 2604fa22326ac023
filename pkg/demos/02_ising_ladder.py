# coding: utf-8

# # Exact statistics of the 2x5 Ising ladder
#
# All 1024 spin configurations are enumerated.  The two corner spins on one
# side act as settings, the two on the other side as outcomes.

# In[1]:

import math

import numpy as np

from bellforge import bell_conditional, closed_form_ladder, ladder10, lattice_chsh


# In[2]:

lat = ladder10(J=1.0, beta=1.0)
table = bell_conditional(lat)
print("P(+,+|+,+) =", table.prob((1, 1), (1, 1)))
print("X_BI       =", lattice_chsh(lat).X_BI)


# The high-temperature polynomial gives the same table up to rounding.

# In[3]:

diffs = []
for beta in np.linspace(0.05, 2.5, 50):
    cf = closed_form_ladder(math.tanh(beta)).probs
    diffs.append(np.abs(cf - bell_conditional(ladder10(beta=beta)).probs).max())
print("largest difference over 50 temperatures:", max(diffs))


# X_BI as a function of beta: it starts like -2 tanh(beta)^2 and levels off
# at -2/3 for strong coupling.

# In[4]:

for beta in (0.05, 0.1, 0.25, 0.5, 1.0, 2.0, 5.0, 20.0):
    x = lattice_chsh(ladder10(beta=beta)).X_BI
    print(f"beta={beta:5.2f}  X_BI={x:+.5f}  X_BI/K^2={x / math.tanh(beta) ** 2:+.4f}")
