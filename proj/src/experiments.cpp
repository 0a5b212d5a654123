#include "waveholtz/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "waveholtz/filter.hpp"
#include "waveholtz/pollution.hpp"

namespace wh
{
    using std::numbers::pi;

    // ---------------------------------------------------------------- config

    const std::map<std::string, std::string>& ExperimentConfig::defaults()
    {
        static const std::map<std::string, std::string> d{
            // problem
            {"dim", "1"},
            {"nx", "32"},
            {"ny", "0"}, // 0: same as nx
            {"xmin", "0"},
            {"xmax", "1"},
            {"ymin", "0"},
            {"ymax", "1"},
            {"bc", "dirichlet"},
            {"order", "2"},
            {"c", "1"},
            {"omega", "5.5"},
            {"a_g", "-100"},
            {"b_g", "20"},
            {"x0", "0.4"},
            {"y0", "0.4"},
            // WaveHoltz
            {"mode", "implicit"},
            {"periods", "1"},
            {"steps", "10"},
            {"alpha", "auto"},
            {"tol", "1e-10"},
            {"maxit", "2000"},
            {"restart", "50"},
            {"inner_tol", "1e-12"},
            {"deflate", "1"},
            // filter-plot
            {"lambda_max", "3"},
            {"samples", "601"},
            {"periods_list", "1,2,3"},
            // scaling
            {"sizes", "128,256,512"},
            {"timing_repeats", "2"},
            {"baseline", "1"},
            {"baseline_sizes", "32,64,128"},
            {"baseline_tol", "1e-6"},
            {"baseline_restart", "50"},
            {"baseline_maxit", "200000"},
            // pollution
            {"orders", "2,4"},
            {"wavelengths", "100"},
            {"eps", "1e-2"},
            {"dispersion_k", "10"},
            {"dispersion_dx", "0.04"},
            {"halvings", "4"},
            {"e2e_mode", "20"},
            {"e2e_kappa_ratio", "0.5"},
        };
        return d;
    }

    ExperimentConfig::ExperimentConfig() : values_{defaults()} {}

    ExperimentConfig ExperimentConfig::for_command(const std::string& command)
    {
        ExperimentConfig cfg;
        if (command == "scaling")
        {
            cfg.set("dim", "2");
            cfg.set("omega", "11");
            cfg.set("periods", "2");
            cfg.set("steps", "10");
            cfg.set("mode", "implicit");
        }
        else if (command == "filter-plot")
        {
            cfg.set("omega", "1");
            cfg.set("steps", "5");
        }
        else if (command == "ppw-table")
        {
            cfg.set("orders", "2,4,6,8");
        }
        else if (command == "converge")
        {
            // the fixed-point test stops on the update size; the error is about tol mu / (1 - mu)
            cfg.set("tol", "1e-12");
        }
        return cfg;
    }

    namespace
    {
        std::string trim(const std::string& s)
        {
            const auto b = s.find_first_not_of(" \t\r\n");
            if (b == std::string::npos)
                return {};
            const auto e = s.find_last_not_of(" \t\r\n");
            return s.substr(b, e - b + 1);
        }

        std::vector<std::string> split(const std::string& s, char sep)
        {
            std::vector<std::string> out;
            std::string item;
            std::istringstream in(s);
            while (std::getline(in, item, sep))
            {
                item = trim(item);
                if (!item.empty())
                    out.push_back(item);
            }
            return out;
        }

        double parse_real(const std::string& key, const std::string& v)
        {
            try
            {
                std::size_t pos = 0;
                const double x = std::stod(v, &pos);
                if (pos != v.size())
                    throw std::invalid_argument("trailing characters");
                return x;
            }
            catch (const std::exception&)
            {
                throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
            }
        }

        int parse_int(const std::string& key, const std::string& v)
        {
            try
            {
                std::size_t pos = 0;
                const long x = std::stol(v, &pos);
                if (pos != v.size() || x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
                    throw std::invalid_argument("bad integer");
                return static_cast<int>(x);
            }
            catch (const std::exception&)
            {
                throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
            }
        }
    }

    void ExperimentConfig::apply_text(const std::string& text)
    {
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line))
        {
            ++lineno;
            line = trim(line);
            if (line.empty() || line[0] == '#')
                continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
            set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        }
    }

    void ExperimentConfig::apply_file(const std::filesystem::path& path)
    {
        std::ifstream in(path);
        if (!in)
            throw ConfigError("cannot read config file " + path.string());
        std::stringstream ss;
        ss << in.rdbuf();
        apply_text(ss.str());
    }

    ExperimentConfig ExperimentConfig::parse(const std::string& text)
    {
        ExperimentConfig cfg;
        cfg.apply_text(text);
        return cfg;
    }

    ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path)
    {
        ExperimentConfig cfg;
        cfg.apply_file(path);
        return cfg;
    }

    std::string ExperimentConfig::serialize() const
    {
        std::string out;
        for (const auto& [k, v] : values_)
            out += k + "=" + v + "\n";
        return out;
    }

    void ExperimentConfig::set(const std::string& key, const std::string& value)
    {
        if (!defaults().count(key))
            throw ConfigError("unknown config key '" + key + "'");
        if (value.find('\n') != std::string::npos)
            throw ConfigError("key '" + key + "': value must be a single line");
        values_[key] = value;
    }

    std::string ExperimentConfig::str(const std::string& key) const
    {
        const auto it = values_.find(key);
        if (it == values_.end())
            throw ConfigError("unknown config key '" + key + "'");
        return it->second;
    }

    double ExperimentConfig::real(const std::string& key) const { return parse_real(key, str(key)); }
    int ExperimentConfig::integer(const std::string& key) const { return parse_int(key, str(key)); }

    bool ExperimentConfig::flag(const std::string& key) const
    {
        const std::string v = str(key);
        if (v == "1" || v == "true" || v == "yes" || v == "on")
            return true;
        if (v == "0" || v == "false" || v == "no" || v == "off")
            return false;
        throw ConfigError("key '" + key + "': expected a boolean, got '" + v + "'");
    }

    std::vector<double> ExperimentConfig::reals(const std::string& key) const
    {
        std::vector<double> out;
        for (const auto& item : split(str(key), ','))
            out.push_back(parse_real(key, item));
        return out;
    }

    std::vector<int> ExperimentConfig::integers(const std::string& key) const
    {
        std::vector<int> out;
        for (const auto& item : split(str(key), ','))
            out.push_back(parse_int(key, item));
        return out;
    }

    std::uint64_t fnv1a(const std::string& text)
    {
        std::uint64_t h = 14695981039346656037ull;
        for (unsigned char ch : text)
        {
            h ^= ch;
            h *= 1099511628211ull;
        }
        return h;
    }

    std::uint64_t ExperimentConfig::hash() const { return fnv1a(serialize()); }

    // ---------------------------------------------------------------- CSV

    std::string format_real(double v)
    {
        if (std::isnan(v))
            return "nan";
        if (std::isinf(v))
            return v > 0 ? "inf" : "-inf";
        return fmt::format("{:.11e}", v);
    }

    CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns, std::uint64_t config_hash)
        : path_{path}, columns_{columns.size()}
    {
        for (std::size_t i = 0; i < columns.size(); ++i)
            buffer_ += (i ? "," : "") + columns[i];
        buffer_ += fmt::format("\n# config-hash: {:016x}\n", config_hash);
    }

    CsvWriter::~CsvWriter()
    {
        std::ofstream out(path_, std::ios::binary);
        out << buffer_;
    }

    CsvWriter& CsvWriter::add(double v) { return add(format_real(v)); }
    CsvWriter& CsvWriter::add(long v) { return add(std::to_string(v)); }

    CsvWriter& CsvWriter::add(const std::string& v)
    {
        row_ += (in_row_ ? "," : "") + v;
        ++in_row_;
        return *this;
    }

    void CsvWriter::end_row()
    {
        if (in_row_ != columns_)
            throw std::logic_error("CSV row has " + std::to_string(in_row_) + " values, expected " + std::to_string(columns_));
        buffer_ += row_ + "\n";
        row_.clear();
        in_row_ = 0;
    }

    bool ExperimentResult::all_passed() const
    {
        return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
    }

    const std::vector<std::string>& experiment_commands()
    {
        static const std::vector<std::string> c{"filter-plot", "converge", "scaling", "pollution", "ppw-table"};
        return c;
    }

    // ---------------------------------------------------------------- threads

    int worker_threads()
    {
        int n = static_cast<int>(std::thread::hardware_concurrency());
        if (n < 1)
            n = 1;
        if (const char* env = std::getenv("WAVEHOLTZ_THREADS"))
        {
            const int cap = std::atoi(env);
            if (cap >= 1)
                n = std::min(n, cap);
        }
        return n;
    }

    void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body)
    {
        const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(worker_threads()));
        if (workers <= 1)
        {
            for (std::size_t i = 0; i < n; ++i)
                body(i);
            return;
        }
        std::atomic<std::size_t> next{0};
        std::exception_ptr error;
        std::mutex error_mutex;
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++)
                {
                    try
                    {
                        body(i);
                    }
                    catch (...)
                    {
                        std::lock_guard lock(error_mutex);
                        if (!error)
                            error = std::current_exception();
                    }
                }
            });
        for (auto& t : pool)
            t.join();
        if (error)
            std::rethrow_exception(error);
    }

    // ---------------------------------------------------------------- problem setup

    namespace
    {
        Boundary boundary_from(const ExperimentConfig& cfg)
        {
            const std::string bc = cfg.str("bc");
            if (bc == "dirichlet")
                return Boundary::Dirichlet;
            if (bc == "periodic")
                return Boundary::Periodic;
            throw ConfigError("key 'bc': expected dirichlet or periodic, got '" + bc + "'");
        }

        CartesianGrid grid_from(const ExperimentConfig& cfg, int nx, int ny)
        {
            const int dim = cfg.integer("dim");
            const Boundary bc = boundary_from(cfg);
            try
            {
                if (dim == 1)
                    return CartesianGrid::interval(nx, bc, {cfg.real("xmin"), cfg.real("xmax")});
                if (dim == 2)
                    return CartesianGrid::rectangle(nx, ny > 0 ? ny : nx, bc, {cfg.real("xmin"), cfg.real("xmax")}, {cfg.real("ymin"), cfg.real("ymax")});
            }
            catch (const std::invalid_argument& e)
            {
                throw ConfigError(e.what());
            }
            throw ConfigError("key 'dim': expected 1 or 2");
        }

        HelmholtzProblem problem_on(const ExperimentConfig& cfg, const CartesianGrid& grid)
        {
            HelmholtzProblem p;
            p.grid = grid;
            p.order = cfg.integer("order");
            if (p.order != 2 && p.order != 4)
                throw ConfigError("key 'order': expected 2 or 4");
            p.wave_speed = cfg.real("c");
            p.omega = cfg.real("omega");
            if (!(p.omega > 0.0) || !(p.wave_speed > 0.0))
                throw ConfigError("omega and c must be positive");
            try
            {
                p.forcing = gaussian_source(grid, cfg.real("a_g"), cfg.real("b_g"), {cfg.real("x0"), cfg.real("y0")});
            }
            catch (const std::invalid_argument& e)
            {
                throw ConfigError(e.what());
            }
            return p;
        }
    }

    HelmholtzProblem problem_from_config(const ExperimentConfig& cfg)
    {
        return problem_on(cfg, grid_from(cfg, cfg.integer("nx"), cfg.integer("ny")));
    }

    WaveHoltzOptions options_from_config(const ExperimentConfig& cfg)
    {
        WaveHoltzOptions o;
        try
        {
            o.mode = time_mode_from_string(cfg.str("mode").c_str());
        }
        catch (const std::invalid_argument& e)
        {
            throw ConfigError(e.what());
        }
        if (o.mode == TimeMode::Continuous)
            throw ConfigError("key 'mode': solves need explicit or implicit");
        o.periods = cfg.integer("periods");
        o.steps_per_period = cfg.integer("steps");
        if (o.periods < 1)
            throw ConfigError("key 'periods' must be positive");
        if (o.mode == TimeMode::Implicit && o.steps_per_period < 5)
            throw ConfigError("implicit time-stepping needs at least 5 time-steps per period");
        if (cfg.str("alpha") != "auto")
            o.alpha = cfg.real("alpha");
        o.tol = cfg.real("tol");
        o.maxit = cfg.integer("maxit");
        o.restart = cfg.integer("restart");
        o.inner_tol = cfg.real("inner_tol");
        if (!(o.tol > 0.0) || o.maxit < 1 || o.restart < 1 || !(o.inner_tol > 0.0))
            throw ConfigError("tolerances and iteration limits must be positive");
        return o;
    }

    // ---------------------------------------------------------------- experiments

    namespace
    {
        CheckResult make_check(std::string name, bool pass, std::string detail)
        {
            return CheckResult{std::move(name), pass, std::move(detail)};
        }

        double rel_max_diff(const GridField& a, const GridField& b)
        {
            GridField d = a;
            d.axpy(-1.0, b);
            const double scale = max_abs(b);
            return scale > 0.0 ? max_abs(d) / scale : max_abs(d);
        }

        /// least-squares slope of log(y) against log(x)
        double loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
        {
            const std::size_t n = x.size();
            double sx = 0, sy = 0, sxx = 0, sxy = 0;
            for (std::size_t i = 0; i < n; ++i)
            {
                const double lx = std::log(x[i]), ly = std::log(y[i]);
                sx += lx;
                sy += ly;
                sxx += lx * lx;
                sxy += lx * ly;
            }
            return (n * sxy - sx * sy) / (n * sxx - sx * sx);
        }

        // -- filter-plot

        ExperimentResult filter_plot(const ExperimentConfig& cfg, const std::filesystem::path& out, bool check)
        {
            const double omega = cfg.real("omega");
            const int steps = cfg.integer("steps");
            const double lmax = cfg.real("lambda_max");
            const int samples = cfg.integer("samples");
            const auto plist = cfg.integers("periods_list");
            if (!(omega > 0.0) || steps < 5 || samples < 2 || !(lmax > 1.0) || plist.empty())
                throw ConfigError("filter-plot needs omega > 0, steps >= 5, samples >= 2, lambda_max > 1 and a periods list");

            const double T = 2.0 * pi / omega;
            const double dt = T / steps;
            const double ad = alpha_d(omega * dt);

            // sample points in units of omega; 1 is always included
            std::vector<double> ratios;
            for (int s = 0; s < samples; ++s)
                ratios.push_back(lmax * s / (samples - 1));
            if (std::find(ratios.begin(), ratios.end(), 1.0) == ratios.end())
            {
                ratios.push_back(1.0);
                std::sort(ratios.begin(), ratios.end());
            }

            ExperimentResult res;
            const auto file = out / "filter_plot.csv";
            const auto sfile = out / "filter_summary.csv";
            CsvWriter csv(file, {"periods", "lambda_over_omega", "beta", "beta_d", "lambda_i_over_omega", "beta_d_implicit"}, cfg.hash());
            CsvWriter sum(sfile, {"periods", "beta_at_omega", "beta_d_at_omega", "beta_d_argmax", "half_width"}, cfg.hash());

            std::vector<double> half_widths;
            bool peak_ok = true, one_ok = true;
            for (int np : plist)
            {
                if (np < 1)
                    throw ConfigError("periods_list entries must be positive");
                double bd_max = -1e300, bd_arg = 0.0, half = std::numeric_limits<double>::quiet_NaN();
                double b_at = 0.0, bd_at = 0.0;
                for (double r : ratios)
                {
                    const double lam = r * omega;
                    const double b = beta(lam, omega, np * T, 0.5);
                    const double bd = np == 1 ? beta_d(lam, omega, T, dt, ad) : beta_d_quadrature(lam, omega, np * steps, dt, ad);
                    const double li = lambda_tilde_implicit(lam, dt);
                    const double bdi = np == 1 ? beta_d(li, omega, T, dt, ad) : beta_d_quadrature(li, omega, np * steps, dt, ad);
                    csv.add(np).add(r).add(b).add(bd).add(li / omega).add(bdi).end_row();
                    if (bd > bd_max)
                    {
                        bd_max = bd;
                        bd_arg = r;
                    }
                    if (r == 1.0)
                    {
                        b_at = b;
                        bd_at = bd;
                    }
                    if (r > 1.0 && std::isnan(half) && b < 0.5)
                        half = r - 1.0;
                }
                sum.add(np).add(b_at).add(bd_at).add(bd_arg).add(half).end_row();
                half_widths.push_back(half);
                one_ok = one_ok && std::abs(b_at - 1.0) <= 1e-12 && std::abs(bd_at - 1.0) <= 1e-12;
                if (np == 1)
                    peak_ok = bd_arg == 1.0;
                res.summary.push_back(fmt::format("N_p={} beta(omega)={} beta_d(omega)={} beta_d argmax={} half-width={}", np, format_real(b_at),
                                                  format_real(bd_at), format_real(bd_arg), format_real(half)));
            }
            res.files = {file, sfile};
            if (check)
            {
                res.checks.push_back(make_check("beta(omega) = beta_d(omega) = 1", one_ok, "all periods"));
                res.checks.push_back(make_check("beta_d peaks at lambda = omega (N_p = 1)", peak_ok, ""));
                bool narrowing = true;
                for (std::size_t i = 1; i < half_widths.size(); ++i)
                    if (plist[i] > plist[i - 1])
                        narrowing = narrowing && half_widths[i] < half_widths[i - 1];
                res.checks.push_back(make_check("main peak narrows with N_p", narrowing, ""));
            }
            return res;
        }

        // -- converge

        ExperimentResult converge(const ExperimentConfig& cfg, const std::filesystem::path& out, bool check)
        {
            const HelmholtzProblem prob = problem_from_config(cfg);
            const WaveHoltzOptions opts = options_from_config(cfg);
            const int ndefl = cfg.integer("deflate");
            if (ndefl < 0)
                throw ConfigError("key 'deflate' must be >= 0");
            check_frequency(prob);

            const TimeCorrection corr = make_correction(prob, opts);
            const double alpha = opts.alpha ? *opts.alpha : alpha_d(corr.omega_tilde * corr.dt);
            FilterConfig fc{corr.omega_tilde, opts.periods, corr.steps_per_period, alpha, opts.mode};

            const bool symbolic = prob.grid.all(Boundary::Dirichlet) || prob.grid.all(Boundary::Periodic);
            double mu = std::numeric_limits<double>::quiet_NaN(), mu_defl = mu;
            DeflationSet defl;
            if (symbolic)
            {
                const auto eigs = discrete_eigenvalues_symbolic(prob.op());
                const RatePrediction pred = predict_rate(eigs, fc, corr.omega_tilde, alpha);
                mu = pred.mu;
                if (ndefl > 0)
                {
                    const auto idx = slowest_modes(pred, static_cast<std::size_t>(ndefl));
                    mu_defl = predict_rate(eigs, fc, corr.omega_tilde, alpha, idx).mu;
                    defl = prob.grid.all(Boundary::Dirichlet) ? deflation_from_sines(prob.op(), idx) : deflation_from_dense(prob.op(), idx);
                }
            }
            else if (ndefl > 0)
            {
                throw ConfigError("deflation needs an all-Dirichlet or all-periodic grid");
            }

            struct Job
            {
                std::string name;
                HelmholtzSolution sol;
                double predicted;
            };
            std::vector<Job> jobs{{"fpi", {}, mu}};
            if (ndefl > 0)
                jobs.push_back({"deflated-fpi", {}, mu_defl});
            jobs.push_back({"gmres", {}, std::numeric_limits<double>::quiet_NaN()});

            parallel_for(jobs.size(), [&](std::size_t i) {
                if (jobs[i].name == "fpi")
                    jobs[i].sol = fpi_solve(prob, opts);
                else if (jobs[i].name == "deflated-fpi")
                    jobs[i].sol = deflated_solve(prob, opts, defl);
                else
                    jobs[i].sol = krylov_solve(prob, opts);
            });

            // direct reference for modest sizes
            std::optional<GridField> direct;
            const std::size_t n = prob.grid.num_unknowns();
            if ((prob.grid.dim() == 1 && n <= 100000) || (prob.grid.dim() == 2 && n <= 130 * 130))
                direct = direct_solve(prob);

            ExperimentResult res;
            const auto rfile = out / "converge_residuals.csv";
            const auto sfile = out / "converge_summary.csv";
            {
                CsvWriter csv(rfile, {"method", "iteration", "residual_2h"}, cfg.hash());
                for (const auto& j : jobs)
                    for (std::size_t k = 0; k < j.sol.run.residuals.size(); ++k)
                        csv.add(j.name).add(static_cast<long>(k + 1)).add(j.sol.run.residuals[k]).end_row();
            }
            {
                CsvWriter csv(sfile,
                              {"method", "iterations", "converged", "cr", "ecr", "predicted_mu", "rate_rel_diff", "max_rel_diff_direct", "seconds"},
                              cfg.hash());
                for (const auto& j : jobs)
                {
                    const auto& r = j.sol.run;
                    const double diff = std::abs(r.cr - j.predicted) / j.predicted;
                    const double ediff = direct ? rel_max_diff(j.sol.u, *direct) : std::numeric_limits<double>::quiet_NaN();
                    csv.add(j.name).add(r.iterations).add(r.converged ? 1 : 0).add(r.cr).add(r.ecr).add(j.predicted).add(diff).add(ediff).add(r.seconds).end_row();
                    res.summary.push_back(fmt::format("{}: its={} converged={} CR={} ECR={} predicted mu={} |measured-predicted|/predicted={} vs direct={}",
                                                      j.name, r.iterations, r.converged, format_real(r.cr), format_real(r.ecr),
                                                      format_real(j.predicted), format_real(diff), format_real(ediff)));
                }
            }
            res.files = {rfile, sfile};

            if (check)
            {
                const auto& fpi = jobs.front().sol.run;
                const auto& gm = jobs.back().sol.run;
                res.checks.push_back(make_check("all runs converged",
                                                std::all_of(jobs.begin(), jobs.end(), [](const Job& j) { return j.sol.run.converged; }), ""));
                if (!std::isnan(fpi.cr) && !std::isnan(mu))
                {
                    const double d = std::abs(fpi.cr - mu) / mu;
                    res.checks.push_back(make_check("FPI rate within 5% of prediction", d <= 0.05, format_real(d)));
                }
                if (ndefl > 0 && !std::isnan(jobs[1].sol.run.cr) && !std::isnan(fpi.cr))
                {
                    const auto& dr = jobs[1].sol.run;
                    res.checks.push_back(make_check("deflated CR below FPI CR", dr.cr < fpi.cr, format_real(dr.cr) + " vs " + format_real(fpi.cr)));
                    // with several modes removed the run ends before the ratios settle, so the rate match is only asserted for one
                    if (ndefl == 1)
                    {
                        const double d = std::abs(dr.cr - mu_defl) / mu_defl;
                        res.checks.push_back(make_check("deflated rate within 5% of prediction", d <= 0.05, format_real(d)));
                    }
                }
                res.checks.push_back(make_check("GMRES iterations <= FPI iterations", gm.iterations <= fpi.iterations,
                                                std::to_string(gm.iterations) + " vs " + std::to_string(fpi.iterations)));
                if (direct)
                {
                    const double e = rel_max_diff(jobs.front().sol.u, *direct);
                    res.checks.push_back(make_check("FPI matches direct solve to 1e-10", e <= 1e-10, format_real(e)));
                    if (ndefl > 0)
                    {
                        const double ed = rel_max_diff(jobs[1].sol.u, *direct);
                        res.checks.push_back(make_check("deflated FPI matches direct solve to 1e-8", ed <= 1e-8, format_real(ed)));
                    }
                }
            }
            return res;
        }

        // -- scaling

        ExperimentResult scaling(const ExperimentConfig& cfg, const std::filesystem::path& out, bool check)
        {
            if (cfg.integer("dim") != 2)
                throw ConfigError("the scaling experiment runs on 2D grids (dim=2)");
            const WaveHoltzOptions opts = options_from_config(cfg);
            const auto sizes = cfg.integers("sizes");
            if (sizes.empty())
                throw ConfigError("key 'sizes' is empty");
            for (int n : sizes)
                if (n < 4 || n > 2048)
                    throw ConfigError("grid size " + std::to_string(n) + " outside the supported range [4, 2048]");

            ExperimentResult res;
            const auto file = out / "scaling.csv";
            struct Row
            {
                int n;
                WaveHoltzRun run;
            };
            std::vector<Row> rows;
            const int repeats = cfg.integer("timing_repeats");
            if (repeats < 1)
                throw ConfigError("timing_repeats must be at least 1");
            // sizes run one after another so that timings are not disturbed; the fastest repeat is kept
            for (int n : sizes)
            {
                const HelmholtzProblem prob = problem_on(cfg, grid_from(cfg, n, n));
                WaveHoltzRun best = krylov_solve(prob, opts).run;
                for (int r = 1; r < repeats; ++r)
                {
                    WaveHoltzRun again = krylov_solve(prob, opts).run;
                    if (again.seconds < best.seconds)
                        best = std::move(again);
                }
                rows.push_back({n, best});
            }
            {
                CsvWriter csv(file, {"cells", "unknowns", "iterations", "converged", "cr", "ecr", "seconds", "seconds_per_unknown", "normalized_time_per_unknown"},
                              cfg.hash());
                const double base = rows.front().run.seconds / (static_cast<double>(rows.front().n) * rows.front().n);
                for (const auto& r : rows)
                {
                    const double nn = static_cast<double>(r.n) * r.n;
                    const double per = r.run.seconds / nn;
                    csv.add(r.n).add(static_cast<long>((r.n - 1) * (r.n - 1))).add(r.run.iterations).add(r.run.converged ? 1 : 0).add(r.run.cr).add(r.run.ecr)
                        .add(r.run.seconds).add(per).add(per / base).end_row();
                    res.summary.push_back(fmt::format("{}^2: its={} CR={} ECR={} time={:.3f}s normalized time/N={:.3f}", r.n, r.run.iterations,
                                                      format_real(r.run.cr), format_real(r.run.ecr), r.run.seconds, per / base));
                }
            }
            res.files.push_back(file);

            std::vector<int> base_its;
            bool base_converged = true;
            if (cfg.flag("baseline"))
            {
                const auto bfile = out / "scaling_baseline.csv";
                CsvWriter csv(bfile, {"cells", "iterations", "converged", "relative_residual"}, cfg.hash());
                for (int n : cfg.integers("baseline_sizes"))
                {
                    const HelmholtzProblem prob = problem_on(cfg, grid_from(cfg, n, n));
                    const SolveReport rep = helmholtz_gmres_baseline(prob, cfg.real("baseline_tol"), cfg.integer("baseline_restart"),
                                                                     cfg.integer("baseline_maxit"), true);
                    csv.add(n).add(rep.iterations).add(rep.converged ? 1 : 0).add(rep.relative_residual).end_row();
                    base_its.push_back(rep.iterations);
                    base_converged = base_converged && rep.converged;
                    res.summary.push_back(fmt::format("baseline Jacobi-GMRES({}) on the Helmholtz matrix, {}^2: its={}{}", cfg.integer("baseline_restart"), n,
                                                      rep.iterations, rep.converged ? "" : " (not converged)"));
                }
                res.files.push_back(bfile);
            }

            if (check)
            {
                int lo = std::numeric_limits<int>::max(), hi = 0;
                bool normal_ok = true, converged = true;
                const double base = rows.front().run.seconds / (static_cast<double>(rows.front().n) * rows.front().n);
                for (const auto& r : rows)
                {
                    lo = std::min(lo, r.run.iterations);
                    hi = std::max(hi, r.run.iterations);
                    const double norm = r.run.seconds / (static_cast<double>(r.n) * r.n) / base;
                    normal_ok = normal_ok && norm >= 0.6 && norm <= 1.6;
                    converged = converged && r.run.converged;
                    if (r.n == 256)
                        res.checks.push_back(make_check("256^2 GMRES iterations 14 +- 3", std::abs(r.run.iterations - 14) <= 3, std::to_string(r.run.iterations)));
                }
                res.checks.push_back(make_check("all sizes converged", converged, ""));
                res.checks.push_back(make_check("iteration count varies by <= 2", hi - lo <= 2, std::to_string(lo) + ".." + std::to_string(hi)));
                res.checks.push_back(make_check("normalized time/N within [0.6, 1.6]", normal_ok, ""));
                if (!base_its.empty())
                {
                    bool increasing = base_converged;
                    for (std::size_t i = 1; i < base_its.size(); ++i)
                        increasing = increasing && base_its[i] > base_its[i - 1];
                    res.checks.push_back(make_check("baseline iterations strictly increasing with N", increasing, ""));
                }
            }
            return res;
        }

        // -- pollution / ppw

        void ppw_rows(const ExperimentConfig& cfg, const std::vector<int>& orders, CsvWriter& csv, ExperimentResult& res)
        {
            for (int p : orders)
                for (double nl : cfg.reals("wavelengths"))
                    for (double eps : cfg.reals("eps"))
                    {
                        const double ppw = ppw_estimate(p, nl, eps);
                        csv.add(p).add(nl).add(eps).add(ppw_prefactor(p)).add(ppw).add(static_cast<long>(std::lround(ppw))).end_row();
                        res.summary.push_back(fmt::format("p={} N_Lambda={} eps={}: prefactor={:.4f} PPW={:.3f} -> {}", p, nl, eps, ppw_prefactor(p), ppw,
                                                          std::lround(ppw)));
                    }
        }

        void ppw_checks(const std::vector<int>& orders, ExperimentResult& res)
        {
            const std::map<int, std::pair<long, double>> expected{{2, {321, 0.51}}, {4, {27, 0.43}}, {6, {12, 0.42}}, {8, {8, 0.42}}};
            for (int p : orders)
            {
                const auto it = expected.find(p);
                if (it == expected.end())
                    continue;
                const long got = std::lround(ppw_estimate(p, 100.0, 1e-2));
                res.checks.push_back(make_check(fmt::format("PPW_{} = {} at N_Lambda/eps = 1e4", p, it->second.first), got == it->second.first,
                                                std::to_string(got)));
                const double pre = std::round(ppw_prefactor(p) * 100.0) / 100.0;
                res.checks.push_back(make_check(fmt::format("prefactor p={} = {:.2f}", p, it->second.second), std::abs(pre - it->second.second) < 1e-9,
                                                fmt::format("{:.4f}", ppw_prefactor(p))));
            }
        }

        ExperimentResult ppw_table(const ExperimentConfig& cfg, const std::filesystem::path& out, bool check)
        {
            ExperimentResult res;
            const auto file = out / "ppw_table.csv";
            const auto orders = cfg.integers("orders");
            {
                CsvWriter csv(file, {"order", "wavelengths", "eps", "prefactor", "ppw", "ppw_rounded"}, cfg.hash());
                ppw_rows(cfg, orders, csv, res);
            }
            res.files.push_back(file);
            if (check)
                ppw_checks(orders, res);
            return res;
        }

        ExperimentResult pollution(const ExperimentConfig& cfg, const std::filesystem::path& out, bool check)
        {
            ExperimentResult res = ppw_table(cfg, out, false);
            const auto orders = cfg.integers("orders");

            // dispersion order
            const double k = cfg.real("dispersion_k");
            const double dx0 = cfg.real("dispersion_dx");
            const int halvings = cfg.integer("halvings");
            if (!(k > 0.0) || !(dx0 > 0.0) || halvings < 1 || k * dx0 >= 1.0)
                throw ConfigError("dispersion sweep needs k > 0, dx > 0, k dx < 1 and at least one halving");
            const auto dfile = out / "dispersion.csv";
            std::map<int, double> slopes;
            {
                CsvWriter csv(dfile, {"order", "dx", "k_dx", "k_tilde", "relative_error", "asymptotic", "slope"}, cfg.hash());
                for (int p : orders)
                {
                    std::vector<double> xs, ys;
                    for (int h = 0; h <= halvings; ++h)
                    {
                        const double dx = dx0 / std::pow(2.0, h);
                        const DispersionResult d = k_tilde(k, dx, p);
                        double slope = std::numeric_limits<double>::quiet_NaN();
                        if (!ys.empty())
                            slope = std::log(ys.back() / d.relative_error) / std::log(2.0);
                        xs.push_back(dx);
                        ys.push_back(d.relative_error);
                        csv.add(p).add(dx).add(k * dx).add(d.k_tilde).add(d.relative_error).add(d.asymptotic_coefficient).add(slope).end_row();
                    }
                    slopes[p] = loglog_slope(xs, ys);
                    res.summary.push_back(fmt::format("dispersion p={}: measured order {:.4f}", p, slopes[p]));
                }
            }
            res.files.push_back(dfile);

            // end-to-end: direct solve of the model problem at PPW_p resolution
            const int m = cfg.integer("e2e_mode");
            const double eps = cfg.reals("eps").front();
            const double L = 1.0;
            const double ke = (m + 0.5) * pi / L; // halfway between eigenvalues
            const double kappa = cfg.real("e2e_kappa_ratio") * ke;
            const double nl = ke * L / (2.0 * pi);
            const auto efile = out / "pollution_e2e.csv";
            std::vector<double> ratios(orders.size());
            std::vector<std::array<double, 4>> vals(orders.size());
            parallel_for(orders.size(), [&](std::size_t i) {
                const int p = orders[i];
                const double ppw = ppw_estimate(p, nl, eps);
                const int cells = static_cast<int>(std::lround(ppw * nl));
                HelmholtzProblem prob;
                prob.grid = CartesianGrid::interval(cells, Boundary::Dirichlet, {0.0, L});
                prob.order = p;
                prob.omega = ke;
                prob.forcing = GridField(prob.grid);
                ModelProblemSpec spec{ke, kappa, 0.0, L, cells, p};
                GridField exact(prob.grid);
                for (int j = 1; j < cells; ++j)
                {
                    prob.forcing.at(j) = std::cos(kappa * prob.grid.coord(0, j));
                    exact.at(j) = continuous_solution(spec, prob.grid.coord(0, j));
                }
                const GridField u = direct_solve(prob);
                const double err = rel_max_diff(u, exact);
                vals[i] = {ppw, static_cast<double>(cells), err, err / eps};
                ratios[i] = err / eps;
            });
            {
                CsvWriter csv(efile, {"order", "k", "wavelengths", "ppw", "cells", "relative_error", "eps", "error_over_eps"}, cfg.hash());
                for (std::size_t i = 0; i < orders.size(); ++i)
                {
                    csv.add(orders[i]).add(ke).add(nl).add(vals[i][0]).add(static_cast<long>(vals[i][1])).add(vals[i][2]).add(eps).add(vals[i][3]).end_row();
                    res.summary.push_back(fmt::format("model problem p={} k={:.4f} at PPW={:.2f}: relative error {} (eps {})", orders[i], ke, vals[i][0],
                                                      format_real(vals[i][2]), eps));
                }
            }
            res.files.push_back(efile);

            if (check)
            {
                ppw_checks(orders, res);
                for (const auto& [p, s] : slopes)
                    res.checks.push_back(make_check(fmt::format("dispersion order p={}", p), std::abs(s - p) <= 0.1, fmt::format("{:.4f}", s)));
                for (std::size_t i = 0; i < orders.size(); ++i)
                    res.checks.push_back(make_check(fmt::format("model error within factor 3 of eps (p={})", orders[i]), ratios[i] >= 1.0 / 3.0 && ratios[i] <= 3.0,
                                                    format_real(ratios[i])));
            }
            return res;
        }
    }

    ExperimentResult run_experiment(const std::string& command, const ExperimentConfig& cfg, const std::filesystem::path& out, bool check)
    {
        std::error_code ec;
        std::filesystem::create_directories(out, ec);
        if (ec)
            throw ConfigError("cannot create output directory " + out.string() + ": " + ec.message());

        ExperimentResult res;
        if (command == "filter-plot")
            res = filter_plot(cfg, out, check);
        else if (command == "converge")
            res = converge(cfg, out, check);
        else if (command == "scaling")
            res = scaling(cfg, out, check);
        else if (command == "pollution")
            res = pollution(cfg, out, check);
        else if (command == "ppw-table")
            res = ppw_table(cfg, out, check);
        else
            throw ConfigError("unknown command '" + command + "'");

        // writers flush on destruction; surface failed writes here
        for (const auto& f : res.files)
            if (!std::filesystem::exists(f) || std::filesystem::file_size(f) == 0)
                throw std::runtime_error("failed to write " + f.string());
        return res;
    }
}
