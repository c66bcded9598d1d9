"""
Training the feature-to-embedding alignment MLP
===============================================

When no joint image/text encoder is available, a 3-layer ReLU MLP maps
flattened CNN feature maps into the text embedding space. It is trained
with a triplet hinge loss max(0, d(a, p) - d(a, n) + margin) where the
anchor is the MLP output, the positive is the true category's Avg Phrase
embedding, and the negative is a randomly drawn wrong category.
"""

import numpy as np

from ovor.align_mlp import TrainConfig, init_params, mlp_forward, train
from ovor.prompts import CategoryTable, CategorySpec

rng = np.random.default_rng(0)
n_classes, feat_dim, embed_dim = 6, 40, 8

# Synthetic task: class text embeddings are random unit vectors, and each
# sample's feature vector is its class prototype plus Gaussian noise.
text = rng.standard_normal((n_classes, embed_dim))
text /= np.linalg.norm(text, axis=1, keepdims=True)
specs = [CategorySpec(f"class{i}", "object", i) for i in range(n_classes)]
table = CategoryTable(categories=specs, embeddings=text)

prototypes = rng.standard_normal((n_classes, feat_dim))
dataset = [
    (prototypes[i % n_classes] + 0.05 * rng.standard_normal(feat_dim), i % n_classes)
    for i in range(300)
]

params0 = init_params(dims=(feat_dim, 32, 16, embed_dim), seed=0)
cfg = TrainConfig(margin=0.2, learning_rate=1e-3, batch_size=32, epochs=40, seed=0)
params, curve = train(params0, dataset, table, cfg)
print(f"loss: epoch 1 = {curve[0]:.4f}  ->  epoch {len(curve)} = {curve[-1]:.4f}")

# Retrieval check: each trained output should be closest to its own class.
hits = 0
for features, label in dataset:
    y = mlp_forward(params, features)
    hits += int(np.argmax(text @ y) == label)
print(f"nearest-class retrieval: {hits}/{len(dataset)}")
