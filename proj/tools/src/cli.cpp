#include "cli.hpp"

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stop_token>
#include <string>
#include <system_error>
#include <vector>

#include "CLI11.hpp"
#include "oxdr/analysis.hpp"
#include "oxdr/codec.hpp"
#include "oxdr/error.hpp"
#include "oxdr/recorder.hpp"
#include "oxdr/registry.hpp"
#include "oxdr/simdevices.hpp"
#include "oxdr/validate.hpp"

namespace oxdr::cli {
namespace {

namespace fs = std::filesystem;
using codec::Encoding;

std::atomic<bool> g_interrupted{false};

extern "C" void on_interrupt(int) { g_interrupted.store(true); }

/// Failure that maps straight to an exit code.
struct Exit {
  int code;
  std::string message;
};

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::io:
    case ErrorCode::sink_failure:
      return kExitIo;
    case ErrorCode::invalid_argument:
      return kExitUsage;
    default:
      return kExitInvalid;
  }
}

std::string describe(const Error& e) {
  return std::string(to_string(e.code())) + ": " + e.what();
}

fs::path output_path(const std::string& arg) {
  fs::path p(arg);
  if (p.is_relative()) {
    if (const char* dir = std::getenv(kOutputDirEnv); dir && *dir) return fs::path(dir) / p;
  }
  return p;
}

/// Output written to "<path>.partial" and renamed over the target only on
/// commit(); abandoned files are removed.
class OutputFile {
 public:
  explicit OutputFile(fs::path target) : target_(std::move(target)) {
    tmp_ = target_;
    tmp_ += ".partial";
    if (target_.has_parent_path()) {
      std::error_code ec;
      fs::create_directories(target_.parent_path(), ec);
    }
    stream_.open(tmp_, std::ios::binary | std::ios::trunc);
    if (!stream_) throw Exit{kExitIo, "cannot open " + target_.string() + " for writing"};
  }
  OutputFile(const OutputFile&) = delete;
  OutputFile& operator=(const OutputFile&) = delete;
  ~OutputFile() {
    if (!committed_) {
      stream_.close();
      std::error_code ec;
      fs::remove(tmp_, ec);
    }
  }

  std::ofstream& stream() { return stream_; }

  std::uintmax_t commit() {
    stream_.flush();
    if (!stream_) throw Exit{kExitIo, "write to " + target_.string() + " failed"};
    stream_.close();
    std::error_code ec;
    fs::rename(tmp_, target_, ec);
    if (ec) throw Exit{kExitIo, "cannot rename onto " + target_.string() + ": " + ec.message()};
    committed_ = true;
    return fs::file_size(target_, ec);
  }

 private:
  fs::path target_;
  fs::path tmp_;
  std::ofstream stream_;
  bool committed_ = false;
};

struct EncodingFlags {
  std::string name;
  bool ndjson = false;
  bool binary = false;

  void add(CLI::App& cmd, const std::string& long_name = "--encoding") {
    auto* e = cmd.add_option(long_name, name, "ndjson or binary (default: from extension)")
                  ->check(CLI::IsMember({"ndjson", "binary"}));
    auto* n = cmd.add_flag("--ndjson", ndjson, "Same as --encoding ndjson");
    auto* b = cmd.add_flag("--binary", binary, "Same as --encoding binary");
    e->excludes(n)->excludes(b);
    n->excludes(b);
  }

  std::optional<Encoding> get() const {
    if (ndjson) return Encoding::ndjson;
    if (binary) return Encoding::binary;
    if (!name.empty()) return codec::parse_encoding(name);
    return std::nullopt;
  }
};

Encoding output_encoding(const EncodingFlags& flags, const fs::path& path) {
  if (auto e = flags.get()) return *e;
  if (auto e = codec::encoding_from_path(path)) return *e;
  throw Exit{kExitUsage, "cannot infer the encoding of " + path.string() +
                             "; use --encoding"};
}

struct Input {
  std::ifstream stream;
  Encoding encoding = Encoding::ndjson;
};

void open_input(Input& in, const std::string& path, const EncodingFlags& flags) {
  in.stream.open(path, std::ios::binary);
  if (!in.stream) throw Exit{kExitIo, "cannot open " + path};
  if (auto e = flags.get()) {
    in.encoding = *e;
    return;
  }
  if (auto e = codec::encoding_from_path(path)) {
    in.encoding = *e;
    return;
  }
  const int c = in.stream.peek();
  if (c == std::char_traits<char>::eof()) {
    in.stream.clear();
    in.encoding = Encoding::ndjson;
    return;
  }
  const std::byte head[1] = {static_cast<std::byte>(c)};
  if (auto e = codec::sniff_encoding(head)) {
    in.encoding = *e;
    return;
  }
  throw Exit{kExitInvalid, "cannot determine the encoding of " + path};
}

std::vector<DemographicsResponse> load_responses(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Exit{kExitIo, "cannot open " + path};
  return analysis::read_responses(in);
}

// ---------------------------------------------------------------------------
// record-sim
// ---------------------------------------------------------------------------

struct RecordSimArgs {
  double rate = 100.0;
  double duration_s = 10.0;
  std::string spec_path;
  std::string output;
  EncodingFlags encoding;
  bool realtime = false;
  std::optional<double> frame_rate;
  std::optional<std::uint64_t> seed;
  std::vector<double> stall_at;
  double stall_ms = 500.0;
};

int cmd_record_sim(const RecordSimArgs& a, std::ostream& out, std::ostream& err) {
  if (!(a.rate > 0)) throw Exit{kExitUsage, "--rate must be positive"};
  if (!(a.duration_s > 0)) throw Exit{kExitUsage, "--duration must be positive"};
  if (a.frame_rate && !(*a.frame_rate > 0)) throw Exit{kExitUsage, "--frame-rate must be positive"};
  if (!(a.stall_ms >= 0)) throw Exit{kExitUsage, "--stall-ms must not be negative"};

  sim::SessionSpec session;
  if (a.spec_path.empty()) {
    session = sim::default_session_spec();
  } else {
    try {
      session = sim::load_session_spec(a.spec_path);
    } catch (const Error& e) {
      throw Exit{kExitUsage, e.what()};
    }
  }
  if (a.seed) {
    for (std::size_t i = 0; i < session.devices.size(); ++i)
      session.devices[i].spec.seed = *a.seed + i;
  }
  const double frame_rate = a.frame_rate.value_or(session.frame_rate_hz);
  std::vector<sim::FrameStall> stalls;
  for (double at : a.stall_at) {
    if (!(at >= 0)) throw Exit{kExitUsage, "--stall-at must not be negative"};
    stalls.push_back({at, a.stall_ms / 1000.0});
  }
  sim::FrameSchedule schedule(frame_rate, stalls);

  const fs::path target = output_path(a.output);
  const Encoding enc = output_encoding(a.encoding, target);
  OutputFile file(target);
  rec::StreamSink sink(file.stream(), enc);

  rec::Recorder recorder;
  struct Late {
    const sim::SimDeviceEntry* entry;
    bool done = false;
  };
  std::vector<Late> late;
  for (const auto& d : session.devices) {
    if (d.register_at_s > 0)
      late.push_back({&d});
    else
      recorder.register_device(sim::make_sim_device(d.spec, d.name, d.serial));
  }

  rec::SteadyClock steady;
  rec::VirtualClock virtual_clock;
  std::stop_source stop;
  std::int64_t now_us = 0;

  rec::RecorderConfig config;
  config.polling_rate_hz = a.rate;
  config.clock = a.realtime ? static_cast<rec::Clock*>(&steady) : &virtual_clock;
  config.sink = &sink;
  config.metadata = session.metadata;
  config.start_time = session.start_time;
  if (a.realtime || !config.start_time) config.start_time = utc_now();
  config.frame_source = [&] { return schedule.frame_at(now_us); };
  config.on_cycle = [&](std::int64_t ts_us) {
    now_us = ts_us;
    if (g_interrupted.load()) stop.request_stop();
    for (auto& l : late) {
      if (!l.done && static_cast<double>(ts_us) >= l.entry->register_at_s * 1e6) {
        recorder.register_device(sim::make_sim_device(l.entry->spec, l.entry->name,
                                                      l.entry->serial));
        l.done = true;
      }
    }
  };

  g_interrupted.store(false);
  auto previous = std::signal(SIGINT, on_interrupt);
  rec::RunResult result;
  try {
    result = recorder.run(config, std::chrono::nanoseconds(std::llround(a.duration_s * 1e9)),
                          stop.get_token());
  } catch (...) {
    std::signal(SIGINT, previous);
    throw;
  }
  std::signal(SIGINT, previous);

  const auto bytes = file.commit();
  out << "wrote " << target.string() << " (" << codec::to_string(enc) << ", " << bytes
      << " bytes)\n";
  out << "snapshots: " << result.snapshots << "\n";
  out << "devices: " << result.devices.size() << "\n";
  for (const auto& d : result.devices) {
    out << "  [" << d.device_id << "] " << d.name << " (" << d.serial << ")  polls "
        << d.polls << "  updates " << d.updates << "  dropped " << d.dropped << "\n";
  }
  if (result.late_cycles > 0) out << "late cycles: " << result.late_cycles << "\n";
  if (g_interrupted.load()) err << "oxdr: interrupted; recording finalized early\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// validate / info / convert / export
// ---------------------------------------------------------------------------

struct InputArgs {
  std::string input;
  EncodingFlags encoding;
};

int cmd_validate(const InputArgs& a, std::ostream& out, std::ostream& err) {
  Input in;
  open_input(in, a.input, a.encoding);
  codec::RecordReader reader(in.stream, in.encoding);
  SequenceValidator validator(&TypeRegistry::global());
  try {
    while (auto r = reader.next()) validator.feed(*r);
  } catch (const Error& e) {
    if (in.stream.bad()) throw Exit{kExitIo, "read error on " + a.input};
    out << a.input << ": " << reader.records_read() << " records decoded\n";
    err << "oxdr: " << describe(e) << "\n";
    return kExitInvalid;
  }
  const ValidationReport report = validator.finish();
  out << a.input << ": " << report.records << " records\n";
  for (const auto& v : report.violations)
    out << "  record " << v.index << ": " << v.rule << ": " << v.detail << "\n";
  out << report.violations.size() << (report.violations.size() == 1 ? " violation\n"
                                                                      : " violations\n");
  return report.ok() ? kExitOk : kExitInvalid;
}

int cmd_info(const InputArgs& a, const std::string& responses, std::ostream& out) {
  Input in;
  open_input(in, a.input, a.encoding);
  codec::DecodeOptions opts;
  opts.extensions = codec::ExtensionPolicy::passthrough;
  codec::RecordReader reader(in.stream, in.encoding, opts);
  auto summary = analysis::summarize(analysis::from_reader(reader));
  out << "file: " << a.input << " (" << codec::to_string(in.encoding) << ")\n";
  out << analysis::format_summary(summary);
  if (!responses.empty()) {
    const auto rs = load_responses(responses);
    const auto joined = analysis::join_questionnaire(std::move(summary), rs);
    out << analysis::format_join(joined.join);
  }
  return kExitOk;
}

int cmd_convert(const InputArgs& a, const std::string& output, const EncodingFlags& to,
                std::ostream& out) {
  Input in;
  open_input(in, a.input, a.encoding);
  const fs::path target = output_path(output);
  const Encoding enc = output_encoding(to, target);
  OutputFile file(target);
  const auto n = codec::transcode(in.stream, in.encoding, file.stream(), enc);
  const auto bytes = file.commit();
  out << "converted " << n << " records: " << a.input << " (" << codec::to_string(in.encoding)
      << ") -> " << target.string() << " (" << codec::to_string(enc) << ", " << bytes
      << " bytes)\n";
  return kExitOk;
}

struct ExportArgs {
  std::vector<std::string> select;
  double rate = 0;
  std::optional<double> horizon_ms;
  bool nearest = false;
  std::string responses;
  std::string output;
};

int cmd_export(const InputArgs& a, const ExportArgs& x, std::ostream& out, std::ostream& err) {
  if (!(x.rate > 0)) throw Exit{kExitUsage, "--rate must be positive"};
  if (x.horizon_ms && !(*x.horizon_ms > 0)) throw Exit{kExitUsage, "--horizon-ms must be positive"};
  const auto selector = x.select.empty() ? analysis::FeatureSelector::all()
                                         : analysis::FeatureSelector::parse(x.select);
  std::vector<DemographicsResponse> responses;
  if (!x.responses.empty()) responses = load_responses(x.responses);

  Input in;
  open_input(in, a.input, a.encoding);
  codec::DecodeOptions opts;
  opts.extensions = codec::ExtensionPolicy::passthrough;
  codec::RecordReader reader(in.stream, in.encoding, opts);
  analysis::ResampleOptions ro;
  ro.target_rate_hz = x.rate;
  ro.staleness_horizon_ms = x.horizon_ms;
  ro.mode = x.nearest ? analysis::AlignMode::nearest : analysis::AlignMode::interpolate;
  auto table = analysis::resample(analysis::from_reader(reader), selector, ro);
  if (!x.responses.empty()) {
    const auto join = analysis::join_questionnaire(table, responses);
    if (!join.matched()) err << "oxdr: no questionnaire response for " << join.participant_id << "\n";
  }

  if (x.output.empty() || x.output == "-") {
    analysis::export_csv(table, out);
    return kExitOk;
  }
  const fs::path target = output_path(x.output);
  OutputFile file(target);
  const auto counts = analysis::export_csv(table, file.stream());
  file.commit();
  out << "exported " << counts.rows << " rows x " << counts.columns << " columns to "
      << target.string() << "\n";
  if (const auto masked = table.masked_cells(); masked > 0)
    out << "masked cells: " << masked << "\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Record, inspect, convert and export OXDR device recordings", "oxdr"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "oxdr 1.0.0");

  RecordSimArgs rs;
  auto* record = app.add_subcommand("record-sim", "Record a session from simulated devices");
  record->add_option("--rate", rs.rate, "Polling rate in Hz")->capture_default_str();
  record->add_option("--duration", rs.duration_s, "Duration in seconds")->capture_default_str();
  record->add_option("--spec", rs.spec_path, "Session description (.simspec); built-in default if omitted");
  record->add_option("-o,--output", rs.output, "Output file")->required();
  rs.encoding.add(*record);
  record->add_flag("--realtime", rs.realtime, "Poll on the wall clock instead of simulated time");
  record->add_option("--frame-rate", rs.frame_rate, "Simulated host frame rate in Hz");
  record->add_option("--seed", rs.seed, "Seed for the first device; later devices use seed+1, ...");
  record->add_option("--stall-at", rs.stall_at, "Freeze the host frame counter at this time (s); repeatable");
  record->add_option("--stall-ms", rs.stall_ms, "Length of each frame stall in ms")->capture_default_str();

  InputArgs va;
  auto* validate = app.add_subcommand("validate", "Check a recording against the format rules");
  validate->add_option("input", va.input, "Recording file")->required();
  va.encoding.add(*validate);

  InputArgs ia;
  std::string info_responses;
  auto* info = app.add_subcommand("info", "Print a session summary");
  info->add_option("input", ia.input, "Recording file")->required();
  ia.encoding.add(*info);
  info->add_option("--responses", info_responses, "Questionnaire responses (.responses.ndjson)");

  InputArgs ca;
  std::string convert_out;
  EncodingFlags convert_to;
  auto* convert = app.add_subcommand("convert", "Transcode between ndjson and binary");
  convert->add_option("input", ca.input, "Recording file")->required();
  convert->add_option("-o,--output", convert_out, "Output file")->required();
  convert->add_option("--from", ca.encoding.name, "Input encoding (default: detected)")
      ->check(CLI::IsMember({"ndjson", "binary"}));
  convert_to.add(*convert, "--to");

  InputArgs ea;
  ExportArgs ex;
  auto* exp = app.add_subcommand("export", "Resample selected features to a uniform grid and write CSV");
  exp->add_option("input", ea.input, "Recording file")->required();
  exp->add_option("-o,--output", ex.output, "CSV file (stdout if omitted)");
  exp->add_option("--select", ex.select, "device[:feature] pattern, '*' wildcards; repeatable");
  exp->add_option("--rate", ex.rate, "Target rate in Hz")->required();
  exp->add_option("--horizon-ms", ex.horizon_ms, "Staleness horizon in ms");
  exp->add_flag("--nearest", ex.nearest, "Nearest-sample alignment instead of interpolation");
  exp->add_option("--responses", ex.responses, "Questionnaire responses to join");
  exp->add_option("--encoding", ea.encoding.name, "Input encoding (default: detected)")
      ->check(CLI::IsMember({"ndjson", "binary"}));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*record) return cmd_record_sim(rs, out, err);
    if (*validate) return cmd_validate(va, out, err);
    if (*info) return cmd_info(ia, info_responses, out);
    if (*convert) return cmd_convert(ca, convert_out, convert_to, out);
    if (*exp) return cmd_export(ea, ex, out, err);
  } catch (const Exit& e) {
    err << "oxdr: " << e.message << "\n";
    return e.code;
  } catch (const Error& e) {
    err << "oxdr: " << describe(e) << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "oxdr: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitUsage;
}

}  // namespace oxdr::cli
