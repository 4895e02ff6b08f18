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

#include "debias/eval/energy.hpp"

#include <cmath>

#include "debias/common/error.hpp"

namespace debias {
namespace {

// value / 10^scale as an exact decimal, trailing zeros removed.
std::string Decimal(__int128 value, int scale) {
  const bool negative = value < 0;
  unsigned __int128 v = negative ? static_cast<unsigned __int128>(-value) : static_cast<unsigned __int128>(value);
  std::string digits;
  do {
    digits.insert(digits.begin(), static_cast<char>('0' + static_cast<int>(v % 10)));
    v /= 10;
  } while (v != 0);
  if (static_cast<int>(digits.size()) <= scale) {
    digits.insert(0, static_cast<std::size_t>(scale + 1) - digits.size(), '0');
  }
  std::string whole = digits.substr(0, digits.size() - static_cast<std::size_t>(scale));
  std::string frac = digits.substr(digits.size() - static_cast<std::size_t>(scale));
  while (!frac.empty() && frac.back() == '0') frac.pop_back();
  std::string out = (negative ? "-" : "") + whole;
  if (!frac.empty()) out += "." + frac;
  return out;
}

std::int64_t RoundChecked(double v, const char* what) {
  if (!std::isfinite(v) || v < 0) {
    throw DomainError(std::string(what) + " must be finite and non-negative");
  }
  return std::llround(v);
}

}  // namespace

Energy Energy::from_micro_wh(std::int64_t uwh) {
  if (uwh < 0) throw DomainError("energy must be non-negative (got " + std::to_string(uwh) + " uWh)");
  return Energy(uwh);
}

Energy Energy::from_kwh(double kwh) {
  return Energy(RoundChecked(kwh * static_cast<double>(kMicroWhPerKwh), "energy"));
}

Energy Energy::from_power(double watts, double seconds) {
  return Energy(RoundChecked(watts * seconds / 3600.0 * 1e6, "energy"));
}

CarbonIntensity CarbonIntensity::from_grams_per_kwh(double g) {
  return {RoundChecked(g * 1000.0, "carbon intensity")};
}

Carbon Carbon::of(Energy energy, CarbonIntensity intensity) {
  Carbon c;
  c.pg_ = static_cast<__int128>(energy.micro_wh()) * intensity.mg_per_kwh;
  return c;
}

double Carbon::grams() const { return static_cast<double>(pg_) / 1e12; }

std::string Carbon::grams_string() const { return Decimal(pg_, 12); }

Energy EnergyLedger::total() const {
  Energy sum;
  for (const auto& e : entries) sum += e.energy;
  return sum;
}

void EnergyLedger::add(const std::string& stage, Energy energy, double duration_h) {
  entries.push_back({stage, energy, duration_h});
}

CarbonReport carbon_report(const EnergyLedger& ledger) {
  if (ledger.intensity.mg_per_kwh < 0) throw DomainError("carbon intensity must be non-negative");
  CarbonReport r;
  for (const auto& e : ledger.entries) {
    if (e.energy.micro_wh() < 0) throw DomainError("stage '" + e.stage + "' has negative energy");
    const Carbon c = Carbon::of(e.energy, ledger.intensity);
    r.stages.push_back({e.stage, e.energy, c});
    r.total_energy += e.energy;
    r.total = r.total + c;
  }
  return r;
}

Json to_json(const EnergyLedger& ledger) {
  Json entries = Json::array();
  for (const auto& e : ledger.entries) {
    entries.push_back({{"stage", e.stage}, {"micro_wh", e.energy.micro_wh()}, {"duration_h", e.duration_h}});
  }
  return Json{{"intensity_mg_per_kwh", ledger.intensity.mg_per_kwh},
              {"method", ledger.method},
              {"entries", entries}};
}

EnergyLedger ledger_from_json(const Json& j) {
  EnergyLedger l;
  l.intensity.mg_per_kwh = j.at("intensity_mg_per_kwh").get<std::int64_t>();
  l.method = j.value("method", l.method);
  for (const auto& e : j.at("entries")) {
    l.add(e.at("stage").get<std::string>(), Energy::from_micro_wh(e.at("micro_wh").get<std::int64_t>()),
          e.at("duration_h").get<double>());
  }
  return l;
}

std::string format_carbon_report(const CarbonReport& report) {
  std::string out = "stage\tkwh\tgco2eq\n";
  for (const auto& s : report.stages) {
    out += s.stage + "\t" + Decimal(s.energy.micro_wh(), 9) + "\t" + s.carbon.grams_string() + "\n";
  }
  out += "total\t" + Decimal(report.total_energy.micro_wh(), 9) + "\t" + report.total.grams_string() + "\n";
  return out;
}

}  // namespace debias
