"""Concentric classes: why a kNN step in distance space helps.

MinDist assigns each point to the group it is least outlying from. When one
group surrounds the other, points of the outer shell look central to the
inner group, so MinDist fails. DistSpace instead runs kNN on the vector of
distances to all groups and separates the two easily.
"""

import numpy as np

from distspace import DepthDistanceClassifier, fit_training_set, gen_setting3

data = gen_setting3(7, n_test=300)
training = fit_training_set(data.X_train, data.y_train, seed=0)

for method in ("mindist", "distspace"):
    clf = DepthDistanceClassifier(method, "bd").fit(data.X_train, data.y_train, training=training)
    err = np.mean(clf.predict(data.X_test) != data.y_test)
    print(f"{method:>9}(bd): test error {100 * err:5.1f}%")

knn = DepthDistanceClassifier("knn", None).fit(data.X_train, data.y_train)
print(f"{'knn':>9}    : test error {100 * np.mean(knn.predict(data.X_test) != data.y_test):5.1f}%"
      f" (k = {knn.k_})")
