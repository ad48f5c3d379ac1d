"""
Reconstructing a two-region scatterer
=====================================

Synthetic far-field data for the rounded square with two refractive
indices is inverted with the factorization indicator. The image is
printed as text; bright characters mark large indicator values.
"""

import numpy as np

from farscope import assemble_F, discretize, indicator_field, sharp
from farscope.cli import preset_config, separation_ratio
from farscope.scene import contains, default_window

cfg = preset_config("example2")
scene = cfg.scene()
grid = discretize(scene, cfg.h)
print(f"{scene.boundary.kind}: {grid.size} cells, n1 = {scene.n1}, n2 = {scene.n2}")

# 64 x 64 far-field matrix from one LU factorization
F = assemble_F(scene, grid, cfg.M)

# spectrum of F_sharp: a handful of large eigenvalues, then rapid decay
S, eig = sharp(F)
print("leading eigenvalues:", np.array2string(eig.values[:6], precision=3))
print("eigenvalues above 1e-12 * max:", np.count_nonzero(eig.values > 1e-12 * eig.values[0]))

# indicator on the bounding box padded by 50 percent
window = default_window(scene.boundary, 0.5)
field = indicator_field(eig, cfg.k, window, (48, 32), F.directions)
print("inside/outside median ratio:", round(separation_ratio(scene, field), 1))

# log scale, top row = largest x2; '+' marks pixels inside the true boundary
logw = np.log10(field.values)
levels = np.clip((logw - logw.max() + 4) / 4, 0, 1)
shades = " .:-=*#%@"
gx, gy = np.meshgrid(field.x, field.y)
inside = contains(scene.boundary, np.stack([gx, gy], axis=-1))
for j in range(field.values.shape[0] - 1, -1, -1):
    print("".join(shades[int(v * (len(shades) - 1))] for v in levels[j]), "  ",
          "".join("+" if c else " " for c in inside[j]))
