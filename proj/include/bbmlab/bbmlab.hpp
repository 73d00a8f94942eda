#pragma once

// Everything in one include.

#include "bbmlab/spectral.hpp"
#include "bbmlab/green_oracle.hpp"
#include "bbmlab/random_field.hpp"
#include "bbmlab/parallel.hpp"
#include "bbmlab/dynamics.hpp"
#include "bbmlab/weight.hpp"
#include "bbmlab/virial.hpp"
#include "bbmlab/lemma_props.hpp"
#include "bbmlab/decay.hpp"
#include "bbmlab/config.hpp"
#include "bbmlab/report.hpp"
#include "bbmlab/cli.hpp"
