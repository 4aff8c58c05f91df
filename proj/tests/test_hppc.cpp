#include <catch_amalgamated.hpp>

#include <cmath>

#include "voltdmd/error.hpp"
#include "voltdmd/hppc.hpp"

using namespace voltdmd;

namespace {

ProtocolScript script(std::vector<ProtocolStep> steps) { return ProtocolScript{std::move(steps)}; }

double lerp_ocv(const std::vector<std::pair<double, double>>& k, double s) {
  if (s <= k.front().first) return k.front().second;
  if (s >= k.back().first) return k.back().second;
  std::size_t j = 1;
  while (k[j].first < s) ++j;
  return k[j - 1].second + (s - k[j - 1].first) / (k[j].first - k[j - 1].first) * (k[j].second - k[j - 1].second);
}

/// Reference integrator: 100 exact-exponential substeps per output sample,
/// current held over each substep, events checked at output instants.
std::vector<double> fine_reference(const CellSpec& c, const ProtocolScript& p, double dt, double soc0) {
  const auto& knots = c.ocv.knots();
  const int sub = 100;
  const double h = dt / sub;
  const double e1 = std::exp(-h / (c.r1 * c.c1)), e2 = std::exp(-h / (c.r2 * c.c2));
  double v1 = 0, v2 = 0, soc = soc0;
  std::vector<double> out;
  for (const auto& st : p.steps) {
    const long long n = std::llround(st.seconds / dt);
    auto amps = [&]() {
      if (st.mode == StepMode::cc_discharge) return st.magnitude;
      if (st.mode == StepMode::cc_charge) return -st.magnitude;
      if (st.mode == StepMode::rest) return 0.0;
      return (lerp_ocv(knots, soc) - v1 - v2 - st.magnitude) / c.r0;
    };
    for (long long k = 0; k < n; ++k) {
      const double i0 = amps();
      const double v = lerp_ocv(knots, soc) - i0 * c.r0 - v1 - v2;
      if (st.cutoff && st.mode == StepMode::cc_discharge && v <= *st.cutoff) break;
      if (st.cutoff && st.mode == StepMode::cc_charge && v >= *st.cutoff) break;
      out.push_back(v);
      for (int s = 0; s < sub; ++s) {
        const double i = amps();
        v1 = v1 * e1 + i * c.r1 * (1 - e1);
        v2 = v2 * e2 + i * c.r2 * (1 - e2);
        soc -= i * h / (3600.0 * c.capacity_ah);
      }
    }
  }
  return out;
}

}  // namespace

TEST_CASE("protocol examples", "[hppc]") {
  const CellSpec c;
  const auto p = hppc_protocol(c, 10);
  REQUIRE(p.steps.size() == 2 + 7 * 10);
  int long_discharges = 0;
  for (const auto& s : p.steps)
    if (s.mode == StepMode::cc_discharge && s.seconds == 1080.0) ++long_discharges;
  CHECK(long_discharges == 10);

  const auto& pulse = p.steps[3];
  CHECK(pulse.mode == StepMode::cc_discharge);
  CHECK(pulse.magnitude == 10.0);
  CHECK(pulse.seconds == 10.0);
  CHECK(p.steps[5].mode == StepMode::cc_charge);
  CHECK(p.steps[5].magnitude == 5.0);
  CHECK(p.steps[5].seconds == 20.0);
  CHECK(p.steps[7].cutoff == 3.95);
  CHECK(p.steps[14].cutoff == c.v_min);

  const auto one = hppc_protocol(c, 1);
  CHECK(one.duration() == 7200.0 + 1800.0 + 3600 + 10 + 180 + 20 + 120 + 1080 + 3600);
  CHECK(hppc_block_seconds() == 8610.0);
  CHECK_THROWS_AS(hppc_protocol(c, 0), DataError);
}

TEST_CASE("zero input equilibrium", "[hppc]") {
  const CellSpec c;
  SimulationOptions o;
  o.initial_soc = 0.7;
  const auto s = simulate_cell(c, {}, script({{StepMode::rest, 0.0, 500.0, std::nullopt}}), o);
  REQUIRE(s.size() == 500);
  const double ocv = c.ocv(0.7);
  for (Eigen::Index k = 0; k < s.size(); ++k) CHECK(s.voltage()[k] == ocv);
  CHECK(s.dt() == 1.0);
  CHECK(s.meta().at("cycle") == "0");
}

TEST_CASE("step drop equals series resistance", "[hppc]") {
  for (int cycles : {0, 100}) {
    const CellSpec c;
    AgingSpec a;
    a.cycles = cycles;
    const double r0 = age_cell(c, a).r0;
    const auto s = simulate_cell(c, a,
                                 script({{StepMode::rest, 0.0, 20.0, std::nullopt},
                                         {StepMode::cc_discharge, 10.0, 60.0, std::nullopt}}));
    CHECK(s.voltage()[19] - s.voltage()[20] == Catch::Approx(10.0 * r0).margin(1e-12));
    CHECK(s.current()[20] == 10.0);
    // relaxation continues downward
    for (Eigen::Index k = 21; k < s.size(); ++k) CHECK(s.voltage()[k] < s.voltage()[k - 1]);
  }
}

TEST_CASE("full record matches fine reference", "[hppc][slow]") {
  const CellSpec c;
  const auto p = hppc_protocol(c, 10);
  const auto s = simulate_cell(c, {}, p);
  const auto ref = fine_reference(c, p, 1.0, SimulationOptions{}.initial_soc);
  REQUIRE(std::size_t(s.size()) == ref.size());
  double sq = 0.0;
  for (Eigen::Index k = 0; k < s.size(); ++k) sq += std::pow(s.voltage()[k] - ref[std::size_t(k)], 2);
  CHECK(std::sqrt(sq / double(s.size())) <= 1e-3);
}

TEST_CASE("charge conservation", "[hppc][property]") {
  const CellSpec c;
  const auto p = script({{StepMode::rest, 0.0, 100.0, std::nullopt},
                         {StepMode::cc_discharge, 10.0, 600.0, std::nullopt},
                         {StepMode::cc_charge, 5.0, 300.0, std::nullopt},
                         {StepMode::rest, 0.0, 50.0, std::nullopt},
                         {StepMode::cc_discharge, 7.5, 400.0, std::nullopt}});
  for (double dt : {1.0, 2.0, 10.0}) {
    SimulationOptions o;
    o.dt = dt;
    const auto tr = simulate_cell_trace(c, {}, p, o);
    const double ah = tr.series.current().sum() * dt / 3600.0;
    const double dsoc = tr.soc[0] - tr.soc[tr.soc.size() - 1];
    CHECK(std::abs(ah - c.capacity_ah * dsoc) <= 1e-6 * std::abs(ah));
  }
}

TEST_CASE("rest convergence", "[hppc][property]") {
  const CellSpec c;
  const double tmax = std::max(c.r1 * c.c1, c.r2 * c.c2);
  const auto p = script({{StepMode::cc_discharge, 10.0, 1080.0, std::nullopt},
                         {StepMode::rest, 0.0, 5 * tmax + 1, std::nullopt}});
  const auto tr = simulate_cell_trace(c, {}, p);
  const Eigen::Index last = tr.series.size() - 1;
  CHECK(std::abs(tr.series.voltage()[last] - c.ocv(tr.soc[last])) <= 1e-4);
}

TEST_CASE("determinism and noise", "[hppc]") {
  const CellSpec c;
  const auto p = hppc_protocol(c, 1);
  SimulationOptions o;
  o.dt = 5.0;
  o.noise_sigma = 1e-3;
  o.seed = 42;
  const auto a = simulate_cell(c, {}, p, o);
  const auto b = simulate_cell(c, {}, p, o);
  CHECK(a.voltage() == b.voltage());
  CHECK(a.current() == b.current());
  CHECK(a.time() == b.time());
  o.seed = 43;
  CHECK(simulate_cell(c, {}, p, o).voltage() != a.voltage());
  o.noise_sigma = 0.0;
  const auto clean = simulate_cell(c, {}, p, o);
  CHECK(clean.current() == a.current());
  const double rms = std::sqrt((a.voltage() - clean.voltage()).squaredNorm() / double(a.size()));
  CHECK(rms == Catch::Approx(1e-3).epsilon(0.1));
}

TEST_CASE("first long discharge stops at 3.95 V", "[hppc]") {
  const CellSpec c;
  const auto s = simulate_cell(c, {}, hppc_protocol(c, 1));
  // charge reaches the upper limit, pulses stay inside the range
  CHECK(s.voltage().maxCoeff() <= c.v_max + 0.1);
  double low = 10.0;
  for (Eigen::Index k = 0; k < s.size(); ++k)
    if (s.current()[k] == 10.0) low = std::min(low, s.voltage()[k]);
  CHECK(low > 3.95);
  CHECK(double(s.size()) < hppc_protocol(c, 1).duration());
}

TEST_CASE("safe range abort and invalid scripts", "[hppc]") {
  CellSpec c;
  CHECK_THROWS_AS(simulate_cell(c, {}, script({{StepMode::cc_discharge, 30.0, 40000.0, std::nullopt}})),
                  DataError);
  CHECK_THROWS_AS(simulate_cell(c, {}, script({{StepMode::rest, 0.0, 10.0, 5.0}})), DataError);
  CHECK_THROWS_AS(simulate_cell(c, {}, script({{StepMode::rest, 0.0, -1.0, std::nullopt}})), DataError);
  SimulationOptions o;
  o.dt = 20.0;
  CHECK_THROWS_AS(simulate_cell(c, {}, script({{StepMode::rest, 0.0, 5.0, std::nullopt}}), o), DataError);
  c.r0 = 0.0;
  CHECK_THROWS_AS(c.validate(), DataError);
}

TEST_CASE("aging", "[hppc]") {
  const CellSpec c;
  const auto same = age_cell(c, {});
  CHECK(same.capacity_ah == c.capacity_ah);
  CHECK(same.r0 == c.r0);
  AgingSpec a;
  a.cycles = 100;
  CHECK(age_cell(c, a).capacity_ah == Catch::Approx(29.4).epsilon(1e-14));
  CHECK(age_cell(c, a).r1 == Catch::Approx(1e-3 * 1.03).epsilon(1e-14));

  double prev_cap = 1e9, prev_r0 = 0.0;
  for (int n = 0; n <= 4000; n += 40) {
    a.cycles = n;
    const auto s = age_cell(c, a);
    CHECK(s.capacity_ah <= prev_cap);
    CHECK(s.r0 >= prev_r0);
    prev_cap = s.capacity_ah;
    prev_r0 = s.r0;
  }
  a.cycles = 5000;
  CHECK_THROWS_AS(age_cell(c, a), DataError);
  a.cycles = -1;
  CHECK_THROWS_AS(age_cell(c, a), DataError);
}

TEST_CASE("ocv curve", "[hppc]") {
  const auto o = OcvCurve::default_curve();
  CHECK(o(0.0) == 2.5);
  CHECK(o(0.5) == 3.7);
  CHECK(o(0.3) == Catch::Approx(3.45));
  CHECK(o(-1.0) == 2.5);
  CHECK(o(2.0) == 4.2);
  CHECK_THROWS_AS(OcvCurve({{0.0, 3.0}}), DataError);
  CHECK_THROWS_AS(OcvCurve({{0.0, 3.0}, {0.0, 3.1}}), DataError);
}

TEST_CASE("protocol json round trip", "[hppc]") {
  const CellSpec c;
  const auto p = hppc_protocol(c, 2);
  const auto j = protocol_to_json(p);
  CHECK(j[3]["mode"] == "cc_discharge");
  CHECK(j[3]["amps"] == 10);
  CHECK(j[3]["seconds"] == 10);
  CHECK(j[1]["volts"] == 4.2);
  CHECK_FALSE(j[2].contains("amps"));
  const auto back = protocol_from_json(nlohmann::json::parse(j.dump()));
  REQUIRE(back.steps.size() == p.steps.size());
  for (std::size_t k = 0; k < p.steps.size(); ++k) {
    CHECK(back.steps[k].mode == p.steps[k].mode);
    CHECK(back.steps[k].magnitude == p.steps[k].magnitude);
    CHECK(back.steps[k].seconds == p.steps[k].seconds);
    CHECK(back.steps[k].cutoff == p.steps[k].cutoff);
  }
  CHECK_THROWS_AS(protocol_from_json(nlohmann::json::parse(R"([{"mode":"pulse","seconds":1}])")), DataError);
  CHECK(cell_to_json(c)["capacity_ah"] == 30.0);
}
