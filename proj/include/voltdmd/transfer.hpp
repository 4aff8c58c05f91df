#pragma once

#include "voltdmd/dmd.hpp"
#include "voltdmd/dmdc.hpp"
#include "voltdmd/evalsweep.hpp"
#include "voltdmd/timeseries.hpp"

namespace voltdmd {

struct TransferResult {
  TimeSeries forecast;  // predicted voltage, measured current, aged timestamps
  RssReport report;     // against measured voltage, seed sample excluded
};

/// Applies a fitted model with its operators held fixed to another record.
/// The initial state comes from the record's own first m samples and the
/// input from its measured current.
TransferResult transfer(const DmdcModel& model, const TimeSeries& aged,
                        const std::vector<Window>& windows = {});
TransferResult transfer(const DmdModel& model, const TimeSeries& aged,
                        const std::vector<Window>& windows = {});

}  // namespace voltdmd
