/*
 * Copyright 2026 The Debias Pipeline Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef DEBIAS_EVAL_ENERGY_HPP_
#define DEBIAS_EVAL_ENERGY_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "debias/common/io.hpp"

namespace debias {

// Energy as an integer count of microwatt-hours. Sums are exact.
class Energy {
 public:
  static constexpr std::int64_t kMicroWhPerKwh = 1'000'000'000;

  constexpr Energy() = default;
  // Throws DomainError for negative values.
  static Energy from_micro_wh(std::int64_t uwh);
  // Rounded to the nearest microwatt-hour.
  static Energy from_kwh(double kwh);
  // Wall-clock estimate: watts x seconds.
  static Energy from_power(double watts, double seconds);

  std::int64_t micro_wh() const { return uwh_; }
  double kwh() const { return static_cast<double>(uwh_) / static_cast<double>(kMicroWhPerKwh); }

  Energy operator+(Energy other) const { return Energy(uwh_ + other.uwh_); }
  Energy& operator+=(Energy other) { uwh_ += other.uwh_; return *this; }
  friend bool operator==(Energy, Energy) = default;
  friend auto operator<=>(Energy, Energy) = default;

 private:
  constexpr explicit Energy(std::int64_t uwh) : uwh_(uwh) {}
  std::int64_t uwh_ = 0;
};

// Carbon intensity as integer milligrams CO2eq per kWh.
struct CarbonIntensity {
  std::int64_t mg_per_kwh = 475'000;

  static CarbonIntensity from_grams_per_kwh(double g);
  double grams_per_kwh() const { return static_cast<double>(mg_per_kwh) / 1000.0; }
  friend bool operator==(CarbonIntensity, CarbonIntensity) = default;
};

inline constexpr double kDefaultCarbonIntensity = 475.0;  // gCO2eq/kWh

// Mass as integer picograms: 1 uWh x 1 mg/kWh = 1 pg, so the product of the
// two integer representations is exact.
class Carbon {
 public:
  Carbon() = default;
  static Carbon of(Energy energy, CarbonIntensity intensity);

  __int128 picograms() const { return pg_; }
  double grams() const;
  // Exact decimal grams without trailing zeros: "475", "1187.5".
  std::string grams_string() const;

  Carbon operator+(Carbon other) const { Carbon c; c.pg_ = pg_ + other.pg_; return c; }
  friend bool operator==(Carbon, Carbon) = default;

 private:
  __int128 pg_ = 0;
};

struct StageEnergy {
  std::string stage;
  Energy energy;
  double duration_h = 0.0;
};

struct EnergyLedger {
  std::vector<StageEnergy> entries;
  CarbonIntensity intensity;
  std::string method = "wall-clock x device-watts";

  Energy total() const;
  void add(const std::string& stage, Energy energy, double duration_h);
};

struct StageCarbon {
  std::string stage;
  Energy energy;
  Carbon carbon;
};

struct CarbonReport {
  std::vector<StageCarbon> stages;
  Energy total_energy;
  Carbon total;
};

// carbon = intensity x energy per stage; the total is the sum of the stages.
CarbonReport carbon_report(const EnergyLedger& ledger);

Json to_json(const EnergyLedger& ledger);
EnergyLedger ledger_from_json(const Json& j);
// Tab-separated: stage, kwh, grams.
std::string format_carbon_report(const CarbonReport& report);

}  // namespace debias

#endif  // DEBIAS_EVAL_ENERGY_HPP_
