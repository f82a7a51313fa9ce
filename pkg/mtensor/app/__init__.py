# Application package: configuration, services, solvers and the tensor library
