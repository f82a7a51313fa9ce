# M-product tensor inverses: library, solvers and benchmark CLI
