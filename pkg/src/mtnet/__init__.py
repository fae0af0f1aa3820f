"""Denoising sequences of noisy network matrices with a matrix-t model.

Modules:

- ``linalg``: SPD factorizations, multivariate log-gamma, vec/kron helpers
- ``distributions``: matrix normal, matrix t, matrix gamma and inverted matrix gamma
- ``gibbs``: the data-augmented Gibbs sampler and its full conditionals
- ``centrality``: degree, closeness, betweenness and eigenvector centrality
- ``synth``: synthetic data and the simulation-study driver
- ``granger``: rolling pairwise Granger F statistics from price panels
- ``config``, ``io``, ``diagnostics``, ``cli``: the batch command line
"""

__version__ = "0.1.0"
