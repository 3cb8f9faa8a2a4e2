"""Physical constants in the package unit system.

Lengths are in µm, charge in fC, potential in V and capacitance in fF.
With these units the vacuum permittivity is about 8.854e-3 fF/µm.
"""

EPS0 = 8.8541878128e-3  # fF/µm
ELEMENTARY_CHARGE = 1.602176634e-19  # C
PLANCK = 6.62607015e-34  # J s
FF = 1e-15  # farad per fF
NM = 1e-3  # µm per nm
