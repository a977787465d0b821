#pragma once

#include <string>
#include <vector>

namespace neurodenoise {

/// Static shape of one layer for op accounting.
struct LayerTopology {
    int neurons = 0;
    int fan_next = 0;       // feed-forward fan-out (width of the next layer)
    bool recurrent = true;  // counts the N^l recurrent term when set
    bool spiking = true;    // readouts are non-spiking
    std::string name;
};

/// Spike bookkeeping for one layer over one run.
struct LayerActivity {
    std::vector<double> spike_counts;  // per-neuron totals over the run
    long steps = 0;

    double total_spikes() const {
        double s = 0.0;
        for (double c : spike_counts) s += c;
        return s;
    }
};

struct CostModel {
    double cost_ac_pj = 0.9;        // per accumulate op (spiking networks)
    double cost_mac_pj = 4.6;       // per multiply-accumulate op (conventional)
    double neuron_equiv_synops = 10.0;  // one NeuronOP ~ 10 SynOPs
};

enum class OpClass { AC, MAC };

struct Histogram {
    std::vector<double> edges;   // size bins + 1
    std::vector<double> masses;  // normalized to 1 when any samples exist

    double mass_in(double lo, double hi) const;
    double mean() const;
    double variance() const;
};

struct PowerReport {
    double synops = 0.0;
    double neuronops = 0.0;
    double readout_macs = 0.0;  // non-spiking readout synaptic ops, billed apart
    double power_proxy_ops_per_s = 0.0;
    double pdp_proxy_ops = 0.0;
    double energy_j = 0.0;
    double latency_s = 0.0;
    double audio_seconds = 0.0;
    long steps = 0;
    Histogram firing_histogram;       // per-neuron mean rates
    Histogram sample_rate_histogram;  // per-run mean rates
    Histogram decay_histogram;        // GSN decay factors
    double silent_fraction = 0.0;
    double low_rate_fraction = 0.0;   // mean rate < 0.2
};

/// Firing-rate driven synaptic op count:
/// sum over spiking layers l of sum_i R_i * (N^{l+1} + [recurrent] N^l).
double count_synops(const std::vector<LayerActivity>& activity,
                    const std::vector<LayerTopology>& topology);

/// One neuron update per neuron per step: sum_l N^l * steps.
double count_neuronops(const std::vector<LayerTopology>& topology, long steps);

/// Ops per second of audio: (synops + 10 * neuronops) / audio_seconds.
double power_proxy(double synops, double neuronops, double audio_seconds,
                   const CostModel& model = CostModel{});

double pdp_proxy(double power_proxy_ops_per_s, double latency_s);

/// Joules for the given op budget at the configured per-op energy.
double energy_cost(double pdp_ops, OpClass op_class, const CostModel& model = CostModel{});

struct FiringStats {
    Histogram per_neuron;
    double mean_rate = 0.0;
    double silent_fraction = 0.0;
    double low_rate_fraction = 0.0;  // below 0.2
};

FiringStats firing_stats(const std::vector<LayerActivity>& activity,
                         const std::vector<LayerTopology>& topology, int bins = 20);

/// Accumulates observed GSN decay factors into a normalized histogram.
class DecayStats {
public:
    explicit DecayStats(int bins = 50);
    void record(double lambda);
    bool empty() const { return total_ == 0.0; }
    Histogram histogram() const;
    double mean() const;
    double variance() const;

private:
    std::vector<double> counts_;
    double total_ = 0.0;
    double sum_ = 0.0;
    double sum_sq_ = 0.0;
};

/// Default algorithmic latency: one 32 ms analysis window plus 0.02 ms
/// encode/decode.
constexpr double kDefaultLatencySeconds = 0.03202;

std::string report_to_json(const PowerReport& report);
std::string report_to_table(const PowerReport& report);

}  // namespace neurodenoise
