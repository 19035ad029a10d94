// Copyright 2026 The TweezerLab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Everything except the HTTP service (service.hpp pulls in the HTTP library).

#include "tweezerlab/adam.hpp"
#include "tweezerlab/ascent.hpp"
#include "tweezerlab/chebyshev.hpp"
#include "tweezerlab/errors.hpp"
#include "tweezerlab/gradient.hpp"
#include "tweezerlab/grape.hpp"
#include "tweezerlab/grid.hpp"
#include "tweezerlab/harness.hpp"
#include "tweezerlab/heatmap.hpp"
#include "tweezerlab/krotov.hpp"
#include "tweezerlab/parallel.hpp"
#include "tweezerlab/params.hpp"
#include "tweezerlab/protocol.hpp"
#include "tweezerlab/protocol_io.hpp"
#include "tweezerlab/run_record.hpp"
#include "tweezerlab/seeds.hpp"
#include "tweezerlab/simulation.hpp"
#include "tweezerlab/spectral.hpp"
#include "tweezerlab/stochastic_ascent.hpp"
#include "tweezerlab/trace.hpp"
