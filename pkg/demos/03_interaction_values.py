"""Pairwise interaction values: splitting credit between feature pairs.

The interaction tensor is symmetric; its diagonal holds each feature's main
effect, defined so every row sums back to that feature's Shapley value.
"""

import numpy as np

from treeshap_hd import (
    BACKGROUND,
    INTERACTION,
    SHAPLEY,
    DecisionTree,
    EnsembleModel,
    ExplainRequest,
    Leaf,
    SplitNode,
    explain,
)

# An AND-shaped model: the big payout needs x0 AND x1 on the same path,
# so most of the credit should land on the (x0, x1) interaction.
tree = DecisionTree(
    SplitNode(0, 0.5,
              SplitNode(1, 0.5, Leaf(1.0, 25.0), Leaf(0.0, 25.0), 50.0),
              Leaf(0.0, 50.0), 100.0)
)
model = EnsembleModel([tree], n_features=3, base_score=0.0)

rng = np.random.default_rng(2)
consumers = np.array([[0.2, 0.2, 0.9]])  # takes the payout path
background = rng.uniform(0, 1, size=(128, 3))

pairs = explain(ExplainRequest(model, consumers, background, BACKGROUND, INTERACTION))
tensor = pairs.values[0]
print("interaction matrix:")
print(np.round(tensor, 4))
print("symmetric:", np.array_equal(tensor, tensor.T))
print("x0/x1 interaction:", round(tensor[0, 1], 4), " (feature 2 is inert: row ",
      np.round(tensor[2], 6), ")")

shap = explain(ExplainRequest(model, consumers, background, BACKGROUND, SHAPLEY))
print("\nrow sums vs Shapley values:")
print("  rows :", np.round(tensor.sum(axis=1), 6))
print("  phi  :", np.round(shap.values[0], 6))
print("prediction check:", round(pairs.base_value + tensor.sum(), 6),
      "==", float(model.predict(consumers)[0]))
