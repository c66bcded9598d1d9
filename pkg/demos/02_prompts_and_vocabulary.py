"""
Prompt templates and Avg Phrase category embeddings
===================================================

Every category expands to three fixed prompt phrases. Their text
embeddings are averaged and re-normalized into one "Avg Phrase" vector
per category. The vocabulary always ends with a catch-all
"something else" category used to absorb unknown objects.
"""

import numpy as np

from ovor.encoders import MockEncoder
from ovor.prompts import build_category_table, build_prompts, make_vocabulary

vocab = make_vocabulary([("cat", "animal"), ("pizza", "food"), ("car", "vehicle")])
for spec in vocab:
    print(f"[{spec.index}] {spec.name} ({spec.supercategory})")
    for phrase in build_prompts(spec):
        print("   ", phrase)

# The mock encoder maps any prompt to a deterministic unit vector, so the
# whole pipeline can run hermetically without model weights.
table = build_category_table(vocab, MockEncoder(seed=0))
print("table shape:", table.embeddings.shape)
print("row norms:  ", np.round(np.linalg.norm(table.embeddings, axis=1), 6))
print("index_of('pizza') =", table.index_of("pizza"))
