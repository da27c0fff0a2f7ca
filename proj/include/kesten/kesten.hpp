#ifndef KESTEN_KESTEN_HPP
#define KESTEN_KESTEN_HPP

#include "kesten/csv.hpp"
#include "kesten/ensemble.hpp"
#include "kesten/ensemble_io.hpp"
#include "kesten/linalg.hpp"
#include "kesten/parallel.hpp"
#include "kesten/projective.hpp"
#include "kesten/random.hpp"
#include "kesten/recursion.hpp"
#include "kesten/renewal.hpp"
#include "kesten/spectrum.hpp"
#include "kesten/transfer.hpp"
#include "kesten/types.hpp"

#endif // KESTEN_KESTEN_HPP
