#pragma once

#include "atc/coupling.hpp"
#include "atc/domain_mesh.hpp"
#include "atc/errors.hpp"
#include "atc/harness.hpp"
#include "atc/lattice_potential.hpp"
#include "atc/models.hpp"
#include "atc/oracle.hpp"
