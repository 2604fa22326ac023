# coding: utf-8

# # Background-based hidden-variable models
#
# Two toy models built from the same five tables: a source distribution for
# lambda0, two "background" variables lambda1 and lambda2 that may see the
# settings, and the two outcome tables.

# In[1]:

import numpy as np

from bellforge import bb1, check_all, chsh, compose_bb, dilorenzo
from bellforge.models import STANDARD_QUAD


# The deterministic model first.  Its CHSH value hits the algebraic maximum.

# In[2]:

m = bb1()
rep = chsh(compose_bb(m), m.settings_quad())
print("M(a,b), M(a',b), M(a,b'), M(a',b') =", rep.M_ab, rep.M_apb, rep.M_abp, rep.M_apbp)
print("X_BI =", rep.X_BI)


# Which premises does it break?  Each verdict carries the largest deviation
# and the conditioning event where it occurs.

# In[3]:

for name, v in check_all(m).items():
    print(f"{name:7s} {'ok' if v.satisfied else 'violated':9s} {v.max_deviation:.3f}  {v.witness}")


# The second model reproduces the singlet correlations exactly.

# In[4]:

s = dilorenzo(STANDARD_QUAD)
joint = compose_bb(s)
print(np.round(joint.probs.reshape(4, 4), 4))
print("|X_BI| =", abs(chsh(joint, s.settings_quad()).X_BI), "vs", 2 * np.sqrt(2))


# Observable marginals do not signal, but the hidden layer does.

# In[5]:

v = check_all(s)
print({k: v[k].satisfied for k in ("NS1", "NS2", "NS4", "NS5", "MI")})
