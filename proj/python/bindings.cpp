// placeholder; real bindings land with the analytics module
#include <pybind11/pybind11.h>

PYBIND11_MODULE(_core, m) { m.doc() = "playerform core (stub)"; }
