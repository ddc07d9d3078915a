#include "renal/io.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace renal {
namespace {

const std::vector<std::string> kBaseColumns = {"t_min", "blood", "kidney", "bladder"};
const std::vector<std::string> kErrorColumns = {"kidney_err", "bladder_err"};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

Error parse_error(const std::string& source, std::size_t line, std::size_t column,
                  const std::string& what) {
  return Error(Errc::ParseError, source + ": line " + std::to_string(line) + ", column " +
                                     std::to_string(column) + ": " + what);
}

double parse_number(const std::string& text, const std::string& source, std::size_t line,
                    std::size_t column) {
  double v = 0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (text.empty() || ec != std::errc() || ptr != end) {
    throw parse_error(source, line, column, "not a number: '" + text + "'");
  }
  if (!std::isfinite(v)) throw parse_error(source, line, column, "value is not finite");
  return v;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  return out;
}

State parse_bounds(const nlohmann::json& j) {
  if (j.is_number()) return State::Constant(j.get<double>());
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 6) throw Error(Errc::ParseError, "bounds need 6 entries or a scalar");
  return Eigen::Map<const State>(v.data());
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, ptr);
}

MeasurementSet parse_measurements(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw parse_error(source, 1, 1, "missing header");
  std::vector<std::string> header = split(line);
  for (auto& h : header) h = trim(h);

  const bool with_errors = header.size() == kBaseColumns.size() + kErrorColumns.size();
  std::vector<std::string> expected = kBaseColumns;
  if (with_errors) expected.insert(expected.end(), kErrorColumns.begin(), kErrorColumns.end());
  if (header != expected) {
    throw parse_error(source, 1, 1,
                      "header must be t_min,blood,kidney,bladder[,kidney_err,bladder_err]");
  }

  std::vector<std::vector<double>> cols(expected.size());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line);
    if (fields.size() != expected.size()) {
      throw parse_error(source, line_no, std::min(fields.size(), expected.size()) + 1,
                        "expected " + std::to_string(expected.size()) + " fields, found " +
                            std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const double v = parse_number(trim(fields[c]), source, line_no, c + 1);
      if (v < 0) {
        throw Error(Errc::NegativeValue, source + ": line " + std::to_string(line_no) +
                                             ", column " + std::to_string(c + 1) + " (" +
                                             expected[c] + ") is negative");
      }
      if (c == 0 && !cols[0].empty() && !(v > cols[0].back())) {
        throw Error(Errc::NonMonotoneTime,
                    source + ": line " + std::to_string(line_no) + ": time does not increase");
      }
      cols[c].push_back(v);
    }
  }
  if (cols[0].empty()) throw parse_error(source, line_no, 1, "no data rows");

  MeasurementSet data{AcquisitionSchedule(to_vector(cols[0])), to_vector(cols[1]),
                      to_vector(cols[2]), to_vector(cols[3]), std::nullopt, std::nullopt};
  if (with_errors) {
    data.kidney_err = to_vector(cols[4]);
    data.bladder_err = to_vector(cols[5]);
  }
  data.validate();
  return data;
}

MeasurementSet load_measurements(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot read " + path.string());
  return parse_measurements(in, path.string());
}

void write_measurements(const MeasurementSet& data, std::ostream& out) {
  const bool with_errors = data.kidney_err && data.bladder_err;
  out << "t_min,blood,kidney,bladder";
  if (with_errors) out << ",kidney_err,bladder_err";
  out << '\n';
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    out << format_double(data.schedule.times()[i]) << ',' << format_double(data.blood[i]) << ','
        << format_double(data.kidney[i]) << ',' << format_double(data.bladder[i]);
    if (with_errors) {
      out << ',' << format_double((*data.kidney_err)[i]) << ','
          << format_double((*data.bladder_err)[i]);
    }
    out << '\n';
  }
}

void save_measurements(const MeasurementSet& data, const std::filesystem::path& path) {
  auto out = open_output(path);
  write_measurements(data, out);
  if (!out) throw Error(Errc::IoError, "failed writing " + path.string());
}

nlohmann::json to_json(const FitResult& result) {
  nlohmann::json coefficients = nlohmann::json::object();
  for (int i = 0; i < 6; ++i) coefficients[RateConstantsd::names[i]] = result.best[i];
  return {{"seed", result.seed},
          {"coefficients", coefficients},
          {"cost", result.best_cost},
          {"iterations", result.iterations},
          {"converged", result.converged},
          {"case", to_string(result.kind)}};
}

EmittedFiles emit_results(const EnsembleResult& result, const MeasurementSet& data,
                          const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(Errc::IoError, "cannot create " + dir.string() + ": " + ec.message());
  const EmittedFiles files{dir / "coefficients.csv", dir / "strips.csv", dir / "runs.json"};

  {
    auto out = open_output(files.coefficients);
    out << "stat";
    for (const char* name : RateConstantsd::names) out << ',' << name;
    out << '\n';
    auto row = [&out](const char* label, const State& v) {
      out << label;
      for (int i = 0; i < 6; ++i) out << ',' << format_double(v[i]);
      out << '\n';
    };
    row("mean", result.mean);
    row("std", result.std);
  }

  {
    auto out = open_output(files.strips);
    const std::size_t runs = result.strips.size();
    out << "t_min,kidney_data,bladder_data";
    for (std::size_t r = 0; r < runs; ++r) out << ",kidney_run" << r;
    for (std::size_t r = 0; r < runs; ++r) out << ",bladder_run" << r;
    out << '\n';
    for (Eigen::Index i = 0; i < data.size(); ++i) {
      out << format_double(data.schedule.times()[i]) << ',' << format_double(data.kidney[i])
          << ',' << format_double(data.bladder[i]);
      for (const Strip& s : result.strips) out << ',' << format_double(s.kidney[i]);
      for (const Strip& s : result.strips) out << ',' << format_double(s.bladder[i]);
      out << '\n';
    }
  }

  {
    nlohmann::json j;
    j["coefficient_order"] = RateConstantsd::names;
    j["mean"] = std::vector<double>(result.mean.data(), result.mean.data() + 6);
    j["std"] = std::vector<double>(result.std.data(), result.std.data() + 6);
    j["runs"] = nlohmann::json::array();
    for (const FitResult& r : result.runs) j["runs"].push_back(to_json(r));
    auto out = open_output(files.runs);
    out << j.dump(2) << '\n';
  }
  return files;
}

std::vector<std::uint64_t> RunConfig::run_seeds() const {
  if (!seeds.empty()) return seeds;
  std::vector<std::uint64_t> out;
  for (int i = 0; i < runs; ++i) out.push_back(seed + static_cast<std::uint64_t>(i));
  return out;
}

void RunConfig::validate() const {
  aco.validate();
  gamma.validate();
  if (runs < 1) throw Error(Errc::InvalidArgument, "runs must be >= 1");
  if (!(noise_scale >= 0)) throw Error(Errc::InvalidArgument, "noise_scale must be >= 0");
  const auto s = run_seeds();
  if (std::set<std::uint64_t>(s.begin(), s.end()).size() != s.size()) {
    throw Error(Errc::InvalidArgument, "seeds must be distinct");
  }
  if ((mode == Mode::Fit || mode == Mode::Ensemble) && data.empty()) {
    throw Error(Errc::InvalidArgument, "fit and ensemble need a data file");
  }
}

void apply_json(RunConfig& config, const nlohmann::json& j) {
  try {
    if (j.contains("mode")) {
      const auto m = j.at("mode").get<std::string>();
      if (m == "simulate") config.mode = Mode::Simulate;
      else if (m == "fit") config.mode = Mode::Fit;
      else if (m == "ensemble") config.mode = Mode::Ensemble;
      else if (m == "validate") config.mode = Mode::Validate;
      else throw Error(Errc::ParseError, "unknown mode '" + m + "'");
    }
    if (j.contains("aco")) {
      const auto& a = j.at("aco");
      AcoConfig& c = config.aco;
      if (a.contains("population")) {
        c.population = a.at("population").get<int>();
        c.new_states = AcoConfig::new_states_for(c.population);
      }
      if (a.contains("new_states")) c.new_states = a.at("new_states").get<int>();
      if (a.contains("q")) c.q = a.at("q").get<double>();
      if (a.contains("xi")) c.xi = a.at("xi").get<double>();
      if (a.contains("max_iter")) c.max_iter = a.at("max_iter").get<int>();
      if (a.contains("conv_tol")) c.conv_tol = a.at("conv_tol").get<double>();
      if (a.contains("lower")) c.lower = parse_bounds(a.at("lower"));
      if (a.contains("upper")) c.upper = parse_bounds(a.at("upper"));
      if (a.contains("threshold")) c.threshold = a.at("threshold").get<double>();
      if (a.contains("v_b")) c.v_b = a.at("v_b").get<double>();
      if (a.contains("internal_steps")) c.internal_steps = a.at("internal_steps").get<int>();
      if (a.contains("init_seed")) {
        if (a.at("init_seed").is_null()) c.init_seed.reset();
        else c.init_seed = a.at("init_seed").get<std::uint64_t>();
      }
    }
    if (j.contains("gamma")) {
      const auto& g = j.at("gamma");
      if (g.contains("amplitude")) config.gamma.amplitude = g.at("amplitude").get<double>();
      if (g.contains("delay")) config.gamma.delay = g.at("delay").get<double>();
      if (g.contains("shape")) config.gamma.shape = g.at("shape").get<double>();
      if (g.contains("scale")) config.gamma.scale = g.at("scale").get<double>();
    }
    if (j.contains("schedule")) {
      const auto& s = j.at("schedule");
      if (s.contains("durations")) {
        const auto d = s.at("durations").get<std::vector<double>>();
        config.schedule = AcquisitionSchedule::from_durations(d);
      } else if (s.contains("times")) {
        config.schedule = AcquisitionSchedule(to_vector(s.at("times").get<std::vector<double>>()));
      }
    }
    if (j.contains("rate_constants")) {
      const auto& k = j.at("rate_constants");
      State v;
      if (k.is_array()) {
        const auto arr = k.get<std::vector<double>>();
        if (arr.size() != 6) throw Error(Errc::ParseError, "rate_constants needs 6 values");
        v = Eigen::Map<const State>(arr.data());
      } else {
        for (int i = 0; i < 6; ++i) v[i] = k.at(RateConstantsd::names[i]).get<double>();
      }
      config.truth = RateConstantsd(v);
    }
    if (j.contains("noise_scale")) config.noise_scale = j.at("noise_scale").get<double>();
    if (j.contains("simulation_v_b")) config.simulation_v_b = j.at("simulation_v_b").get<double>();
    if (j.contains("kidney_volume")) config.kidney_volume = j.at("kidney_volume").get<double>();
    if (j.contains("bladder_volume")) config.bladder_volume = j.at("bladder_volume").get<double>();
    if (j.contains("count_scale")) config.count_scale = j.at("count_scale").get<double>();
    if (j.contains("runs")) config.runs = j.at("runs").get<int>();
    if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("seeds")) config.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("data")) config.data = j.at("data").get<std::string>();
    if (j.contains("out")) config.out = j.at("out").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, std::string("config: ") + e.what());
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot read " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, path.string() + ": " + e.what());
  }
  RunConfig config;
  apply_json(config, j);
  return config;
}

}  // namespace renal
