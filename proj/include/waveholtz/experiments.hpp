#ifndef WAVEHOLTZ_EXPERIMENTS_HPP
#define WAVEHOLTZ_EXPERIMENTS_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "waveholtz/solver.hpp"

namespace wh
{
    /// invalid key, unparsable value or unreadable config file
    class ConfigError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    /// @brief Flat key=value experiment settings.
    ///
    /// Every known key has a default; unknown keys are rejected. The text form
    /// lists keys in sorted order, so serialize/parse round-trips exactly.
    class ExperimentConfig
    {
    public:
        ExperimentConfig();

        /// defaults with the per-command overrides applied (e.g. the square problem for scaling)
        static ExperimentConfig for_command(const std::string& command);

        static ExperimentConfig parse(const std::string& text);
        static ExperimentConfig load(const std::filesystem::path& path);

        /// overlay key=value lines ('#' starts a comment line)
        void apply_text(const std::string& text);
        void apply_file(const std::filesystem::path& path);
        std::string serialize() const;

        /// throws ConfigError for unknown keys
        void set(const std::string& key, const std::string& value);
        bool has(const std::string& key) const { return values_.count(key) != 0; }

        std::string str(const std::string& key) const;
        double real(const std::string& key) const;
        int integer(const std::string& key) const;
        bool flag(const std::string& key) const;
        std::vector<double> reals(const std::string& key) const;
        std::vector<int> integers(const std::string& key) const;

        /// FNV-1a of serialize()
        std::uint64_t hash() const;

        bool operator==(const ExperimentConfig& o) const { return values_ == o.values_; }

        static const std::map<std::string, std::string>& defaults();

    private:
        std::map<std::string, std::string> values_;
    };

    std::uint64_t fnv1a(const std::string& text);

    /// @brief CSV output: header row, then a comment line with the config hash.
    ///
    /// Reals are written in %.11e (12 significant digits).
    class CsvWriter
    {
    public:
        CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns, std::uint64_t config_hash);
        ~CsvWriter();

        CsvWriter& add(double v);
        CsvWriter& add(long v);
        CsvWriter& add(int v) { return add(static_cast<long>(v)); }
        CsvWriter& add(const std::string& v);
        void end_row();

        const std::filesystem::path& path() const { return path_; }

    private:
        std::filesystem::path path_;
        std::string buffer_;
        std::string row_;
        std::size_t columns_;
        std::size_t in_row_ = 0;
    };

    std::string format_real(double v);

    struct CheckResult
    {
        std::string name;
        bool pass = false;
        std::string detail;
    };

    struct ExperimentResult
    {
        std::vector<std::filesystem::path> files;
        std::vector<std::string> summary;
        std::vector<CheckResult> checks;

        bool all_passed() const;
    };

    /// commands: filter-plot, converge, scaling, pollution, ppw-table
    const std::vector<std::string>& experiment_commands();

    /// @brief Runs one experiment and writes its CSV files into `out`.
    ///
    /// Throws ConfigError for bad settings; solver failures propagate as
    /// std::runtime_error / std::domain_error. Checks are evaluated when `check` is set.
    ExperimentResult run_experiment(const std::string& command, const ExperimentConfig& cfg, const std::filesystem::path& out, bool check);

    /// worker count: hardware concurrency capped by WAVEHOLTZ_THREADS
    int worker_threads();

    /// runs body(0..n-1) on up to worker_threads() threads; rethrows the first exception
    void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

    /// problem and solver options described by a config
    HelmholtzProblem problem_from_config(const ExperimentConfig& cfg);
    WaveHoltzOptions options_from_config(const ExperimentConfig& cfg);
}

#endif
