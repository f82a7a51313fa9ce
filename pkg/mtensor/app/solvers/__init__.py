# Inverse solvers package
