#pragma once

#include <optional>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lsw/device.hpp"
#include "lsw/metrics.hpp"
#include "lsw/preemph.hpp"
#include "lsw/signal.hpp"

namespace lsw {

/// Timing of the two-laser, two-gate transmitter. Times are in seconds and
/// scale with the slot length.
struct GateSchedule {
    double slot_s = 20e-9;
    double laser_period_s = 80e-9;
    double laser_phase_offset_s = 20e-9;
    double gate_period_s = 40e-9;
    double gate_open_s = 20e-9;
    double blank_head_s = 15e-9;
    double blank_tail_s = 5e-9;

    double burst_s() const noexcept { return blank_head_s + gate_open_s + blank_tail_s; }
    void validate() const;
};

/// Schedule for a given slot length, scaled from the 20 ns reference timing
/// (15 ns blanked at the head of each laser burst, 5 ns at the tail).
GateSchedule build_schedule(double slot_s = 20e-9);

/// Whether the gate of `laser_id` (1 or 2) is nominally open at time t.
/// Slot k covers [k slot, (k + 1) slot) and belongs to laser 1 for even k.
bool gate_open(const GateSchedule& s, int laser_id, double t_s) noexcept;

struct SlotEntry {
    int slot_index = 0;
    int laser_id = 1;
    int channel = 0;
};

/// One period of the slot sequence; it repeats indefinitely.
struct SlotAssignment {
    std::vector<SlotEntry> slots;

    /// Slots indexed 0..n-1, lasers alternating 1, 2, 1, ...; needs an even
    /// count of at least 2.
    void validate() const;
    /// Builds an alternating assignment from a channel per slot.
    static SlotAssignment alternating(const std::vector<int>& channels);
};

struct SystemSimConfig {
    double sim_rate_hz = 50e9;
    int n_periods = 3;              ///< simulated sequence periods; the last is reported
    bool gates_enabled = true;      ///< false holds both gates open
    bool equalize_slot_power = false;
    double edge_guard_s = 1e-9;     ///< excluded at both ends of an open window for flatness
    double gates_off_current_ma = 45.0;

    void validate() const;
};

struct SlotReport {
    int slot_index = 0;
    int laser_id = 1;
    int channel = 0;
    double open_start_s = 0.0;
    double open_end_s = 0.0;
    double max_abs_offset_ghz = 0.0;  ///< over the open window
    double flatness_db = 0.0;         ///< max |10 log10(P / median)| inside the guarded window
    double mean_power_mw = 0.0;
    /// 90-90 transition at the boundary that opens this slot. Absent when the
    /// channel does not change there or no transition is detected.
    std::optional<double> transition_90_90_s;
    SwitchMetrics metrics;
};

struct SystemResult {
    SampledWaveform power_out;        ///< summed gated output over the reported period (mW)
    SampledWaveform freq_out;         ///< power-weighted offset from each laser's target (GHz)
    std::vector<SampledWaveform> laser_freq;  ///< per laser, offset from its own target (GHz)
    std::vector<SampledWaveform> gate_out;    ///< per gate, optical output (mW)
    std::vector<SlotReport> slots;
    double extinction_db = 0.0;       ///< smallest on/off ratio of the two gates
    bool gates_complementary = true;
};

/// Laser and gate devices of the transmitter (index 0 is laser/gate 1).
struct TransmitterDevices {
    DsdbrParams laser[2];
    SoaParams soa[2];
};

TransmitterDevices transmitter_devices(const DeviceSet& d);

/// Every channel change each laser performs in the assignment, as (from, to).
std::vector<std::pair<int, int>> required_switch_events(const SlotAssignment& a);

/// Optimises pre-emphasis for every event the assignment needs.
PreemphasisTable optimize_assignment_preemphasis(const SlotAssignment& a, const DsdbrParams& laser,
                                                 const RegressionConfig& cfg, const AwgModel& awg);

/// Full transmitter simulation. `soa_drive` is one gate period of gate drive
/// (open for its first half) at its native rate; both gates use it, the
/// second shifted by one slot. Throws NotFoundError when the table lacks an
/// event and std::invalid_argument when assignment and schedule disagree.
SystemResult simulate_transmitter(const SlotAssignment& assignment, const TransmitterDevices& devices,
                                  const GateSchedule& schedule, const AwgModel& awg_laser, const AwgModel& awg_soa,
                                  const PreemphasisTable& preemphasis, const SampledWaveform& soa_drive,
                                  const SystemSimConfig& cfg = {});

struct SlotVerdict {
    int slot_index = 0;
    bool frequency_ok = false;
    bool flatness_ok = false;
    bool pass() const noexcept { return frequency_ok && flatness_ok; }
};

struct ValidationReport {
    std::vector<SlotVerdict> slots;
    bool all_pass = true;
    double tol_ghz = 5.0;
    double flatness_db = 1.0;
};

ValidationReport validate_slots(const std::vector<SlotReport>& slots, double tol_ghz = 5.0, double flatness_db = 1.0);

nlohmann::json to_json(const ValidationReport& r);
/// CSV header + one row per slot (times in ns).
void write_slot_csv(std::ostream& os, const std::vector<SlotReport>& slots);

}  // namespace lsw
