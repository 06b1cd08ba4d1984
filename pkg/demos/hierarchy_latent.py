"""Mine path constraints of a label tree through pairwise latent indicators.

Run: python3 demos/hierarchy_latent.py
"""

from ilpmine.latent import mine_with_latents, observed_pairs
from ilpmine.miner import verify_implied
from ilpmine.tasks import hmc

spec = hmc.HierarchySpec(depth=3, branching=3)
train = hmc.gen_hmc_dataset(spec, 2000, noise_level=0.1, seed=6)
schema = observed_pairs(train)
eq = mine_with_latents(train, schema)
print(f"{spec.n_classes} labels, {schema.n_pairs} tracked pairs, {schema.dim} columns, {eq.n_rows} mined equalities")

canon = hmc.hmc_canonical_constraints(spec, schema)
rep = verify_implied(eq, [(row, rhs) for _, row, rhs in canon])
print(f"{rep.n_implied}/{len(canon)} hierarchy constraints implied")
for name, _, _ in canon[:5]:
    print("  e.g.", name)
