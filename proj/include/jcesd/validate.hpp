// SPDX-License-Identifier: Apache-2.0
//
// jcesd - link-level simulation and semi-blind joint channel estimation
// and signal detection for downlink multi-user MIMO-OFDM
// Copyright (C) 2026 the jcesd authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef JCESD_VALIDATE_HPP
#define JCESD_VALIDATE_HPP

#include <string>
#include <vector>

namespace jcesd::validate {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

// End-to-end release gates with pinned tolerances. Suites:
//   invariants: solver, receiver, precoder, modem and harness checks
//   appendix:   perturbation bound and random-start tail probability
//   all:        both
std::vector<CheckResult> run_suite(const std::string& suite);

// Prints one pass/fail line per check to stdout; returns the failure count.
int report(const std::vector<CheckResult>& results);

} // namespace jcesd::validate

#endif
