#include "voltdmd/transfer.hpp"

#include <string>

namespace voltdmd {

namespace {

template <typename Model>
TransferResult run_transfer(const Model& model, const TimeSeries& aged,
                            const std::vector<Window>& windows) {
  const Eigen::Index need = model.spec.history() + 3;
  if (aged.size() < need)
    throw DataError("record of " + std::to_string(aged.size()) + " samples is shorter than the " +
                    std::to_string(need) + " needed to seed and forecast");
  const Forecast fc = forecast(model, aged);
  TransferResult out;
  out.report = score_forecast(aged, fc, fc.first_index + 1, windows);
  const Eigen::Index count = fc.voltage.size();
  out.forecast = TimeSeries::from_samples(aged.time().tail(count), aged.current().tail(count),
                                          fc.voltage, aged.meta(), ValidationOptions::forecast());
  return out;
}

}  // namespace

TransferResult transfer(const DmdcModel& model, const TimeSeries& aged,
                        const std::vector<Window>& windows) {
  return run_transfer(model, aged, windows);
}

TransferResult transfer(const DmdModel& model, const TimeSeries& aged,
                        const std::vector<Window>& windows) {
  return run_transfer(model, aged, windows);
}

}  // namespace voltdmd
