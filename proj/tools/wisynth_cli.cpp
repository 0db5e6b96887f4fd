// wisynth: Wi-Fi-to-video synthesis toolkit command-line surface.
//
// Exit codes: 0 success, 1 usage, 2 config/parse, 3 I/O, 4 shape/data,
// 5 verification failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "wisynth/checkpoint.hpp"
#include "wisynth/config.hpp"
#include "wisynth/csi_io.hpp"
#include "wisynth/dataset.hpp"
#include "wisynth/gradcheck.hpp"
#include "wisynth/metrics.hpp"
#include "wisynth/network.hpp"
#include "wisynth/training.hpp"

namespace {

using namespace wisynth;

struct GenerateArgs {
  std::string out;
  std::size_t samples = 1;
  std::string kind = "silhouette";
  std::string config;
  std::uint64_t seed = 0;
};

int cmd_generate(const GenerateArgs& a) {
  RunConfig cfg = a.config.empty() ? RunConfig{} : load_config_file(a.config);
  if (a.kind == "silhouette") {
    cfg.kind = VideoClip::Kind::kSilhouette;
    cfg.model.clip_channels = 1;
  } else if (a.kind == "skeleton") {
    cfg.kind = VideoClip::Kind::kSkeleton;
    cfg.model.clip_channels = 3;
  } else {
    throw ParseError("--kind must be silhouette or skeleton");
  }
  cfg.scene.seed = a.seed;
  cfg.validate();
  const std::vector<SamplePair> samples =
      generate_dataset(a.samples, cfg.model.t, cfg.model.n_pkt, cfg.scene,
                       cfg.kind, cfg.model.height, cfg.model.width);
  write_dataset(a.out, samples);
  std::cout << samples.size() << " samples written to " << a.out << "\n";
  return 0;
}

struct SanitizeArgs {
  std::string in;
  std::string out;
  std::size_t window = 51;
  double nsigma = 3.0;
};

int cmd_sanitize(const SanitizeArgs& a) {
  const CsiSequence csi = read_csib(read_file(a.in));
  const HampelConfig cfg{a.window, a.nsigma};
  const AmplitudeMatrix amps = condense(sanitize(extract_amplitudes(csi), cfg));
  const std::string csv = export_amplitude_csv(amps);
  write_file(a.out, std::vector<std::uint8_t>(csv.begin(), csv.end()));
  std::cout << amps.n_pkt() << " packets x " << amps.n_sub()
            << " subcarriers written to " << a.out << "\n";
  return 0;
}

struct TrainArgs {
  std::string data;
  std::string out;
  std::string config;
};

int cmd_train(const TrainArgs& a) {
  RunConfig cfg = load_config_file(a.config);
  const std::vector<SamplePair> pairs = load_dataset(a.data);

  std::vector<TrainSample> samples;
  samples.reserve(pairs.size());
  for (const SamplePair& p : pairs)
    samples.push_back(
        {clip_to_tensor(p.clip), preprocess_csi(p.csi, cfg.sanitize)});

  Trainer tr(cfg.model, cfg.optim, cfg.loss);
  std::size_t epochs_done = 0;
  const std::string ckpt_path = a.out + "/model.w8ts";
  if (std::filesystem::exists(ckpt_path)) {
    const BlockMap blocks = read_checkpoint(read_file(ckpt_path));
    trainer_restore(tr, blocks);
    const auto it = blocks.find("meta.epoch");
    if (it != blocks.end())
      epochs_done = static_cast<std::size_t>(it->second.data()[0]);
    std::cout << "resuming from epoch " << epochs_done << "\n";
  }

  const TrainResult result = train(tr, samples, cfg, a.out, epochs_done);
  if (!result.epoch_losses.empty()) {
    const LossRecord& last = result.epoch_losses.back();
    std::printf(
        "epoch %zu: l_adv_c=%.6g l_adv_g=%.6g mse_y=%.6g mse_v=%.6g "
        "mse_s=%.6g\n",
        result.first_epoch + result.epoch_losses.size() - 1, last.l_adv_c,
        last.l_adv_g, last.mse_y, last.mse_v, last.mse_s);
  }
  std::cout << "checkpoint written to " << ckpt_path << "\n";
  return 0;
}

struct SynthesizeArgs {
  std::string model;
  std::string csi;
  std::string out;
};

// Signal-only inference: sanitize -> encode_signal -> lift -> decode.
// Deliberately reads no video data anywhere.
int cmd_synthesize(const SynthesizeArgs& a) {
  const BlockMap blocks = read_checkpoint(read_file(a.model));
  const auto cfg_it = blocks.find("meta.config");
  if (cfg_it == blocks.end())
    throw ParseError("checkpoint lacks meta.config block");
  RunConfig cfg = parse_config(text_from_block(cfg_it->second));

  const CsiSequence csi = read_csib(read_file(a.csi));
  if (csi.n_pkt() != cfg.model.n_pkt || csi.n_sub() != cfg.model.n_sub)
    throw ShapeError("CSI packet/subcarrier counts do not match checkpoint");

  Trainer tr(cfg.model, cfg.optim, cfg.loss);
  trainer_restore(tr, blocks);

  const AmplitudeMatrix amps = preprocess_csi(csi, cfg.sanitize);
  const Tensor h = tr.student.encode_signal(amps);
  const Tensor v = tr.student.lift_to_visual(h);
  const Tensor s = tr.teacher.decode_video(v, false);
  const VideoClip clip = tensor_to_clip(s, cfg.kind);

  std::error_code ec;
  std::filesystem::create_directories(a.out, ec);
  if (ec) throw IoError("cannot create output directory: " + a.out);
  const bool color = clip.channels == 3;
  for (std::size_t t = 0; t < clip.frames_count; ++t)
    write_file(a.out + "/" + detail::frame_file_name(t, color),
               encode_pnm(clip, t));
  std::cout << clip.frames_count << " frames written to " << a.out << "\n";
  return 0;
}

struct EvaluateArgs {
  std::string pred;
  std::string truth;
  std::string thresholds = "1,3,5,25,30,40,50";
};

VideoClip load_frames_dir(const std::string& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir);
  const std::vector<std::string> files = list_frame_files(dir);
  if (files.empty()) throw IoError("no frame files in " + dir);
  std::vector<VideoClip> frames;
  for (const std::string& f : files) frames.push_back(decode_pnm(read_file(f)));
  return stack_frames(frames);
}

int cmd_evaluate(const EvaluateArgs& a) {
  const VideoClip pred = load_frames_dir(a.pred);
  const VideoClip truth = load_frames_dir(a.truth);
  std::vector<double> xi;
  std::stringstream ss(a.thresholds);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      xi.push_back(std::stod(item));
    } catch (const std::invalid_argument&) {
      throw ParseError("bad threshold: " + item);
    }
  }
  if (xi.empty()) throw ParseError("no thresholds given");
  const MetricReport report = evaluate_clips(pred, truth, xi);
  std::cout << report_to_text(report);
  return 0;
}

struct GradcheckArgs {
  std::uint64_t seed = 0;
  std::size_t seeds = 20;
  double corrupt = 0.0;
};

int cmd_gradcheck(const GradcheckArgs& a) {
  const std::vector<GradCheckResult> results =
      run_gradcheck_suite(a.seed, a.seeds, a.corrupt);
  // Aggregate across seeds so the report lists each primitive once.
  std::map<std::string, GradCheckResult> by_name;
  for (const GradCheckResult& r : results) {
    const std::size_t cut = r.name.find("] ");
    const std::string base =
        cut == std::string::npos ? r.name : r.name.substr(cut + 2);
    GradCheckResult& agg = by_name[base];
    agg.name = base;
    agg.max_rel_err = std::max(agg.max_rel_err, r.max_rel_err);
    agg.pass = agg.pass && r.pass;
  }
  bool all_pass = true;
  for (const auto& [name, r] : by_name) {
    std::printf("%-20s max_rel_err=%.3e %s\n", name.c_str(), r.max_rel_err,
                r.pass ? "PASS" : "FAIL");
    all_pass = all_pass && r.pass;
  }
  if (!all_pass) throw VerificationError("gradient check failed");
  std::cout << by_name.size() << " primitives checked over " << a.seeds
            << " seeds\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wi-Fi-to-video synthesis toolkit"};
  app.require_subcommand(1);

  GenerateArgs gen;
  CLI::App* c_gen = app.add_subcommand("generate", "Generate a paired dataset");
  c_gen->add_option("--out", gen.out, "Output dataset directory")->required();
  c_gen->add_option("--samples", gen.samples, "Sample count")->required();
  c_gen->add_option("--kind", gen.kind, "silhouette or skeleton");
  c_gen->add_option("--config", gen.config, "Run config file");
  c_gen->add_option("--seed", gen.seed, "Scene seed");

  SanitizeArgs san;
  CLI::App* c_san = app.add_subcommand("sanitize", "CSIB to amplitude CSV");
  c_san->add_option("--in", san.in, "Input .csib file")->required();
  c_san->add_option("--out", san.out, "Output .csv file")->required();
  c_san->add_option("--window", san.window, "Hampel window (odd)");
  c_san->add_option("--nsigma", san.nsigma, "Hampel MAD multiplier");

  TrainArgs trn;
  CLI::App* c_trn = app.add_subcommand("train", "Train teacher and student");
  c_trn->add_option("--data", trn.data, "Dataset directory")->required();
  c_trn->add_option("--out", trn.out, "Output directory")->required();
  c_trn->add_option("--config", trn.config, "Run config file")->required();

  SynthesizeArgs syn;
  CLI::App* c_syn =
      app.add_subcommand("synthesize", "Synthesize frames from CSI alone");
  c_syn->add_option("--model", syn.model, "Checkpoint .w8ts")->required();
  c_syn->add_option("--csi", syn.csi, "Input .csib file")->required();
  c_syn->add_option("--out", syn.out, "Output frame directory")->required();

  EvaluateArgs eva;
  CLI::App* c_eva = app.add_subcommand("evaluate", "Compare frame directories");
  c_eva->add_option("--pred", eva.pred, "Predicted frames")->required();
  c_eva->add_option("--truth", eva.truth, "Ground-truth frames")->required();
  c_eva->add_option("--thresholds", eva.thresholds, "PCS thresholds, comma list");

  GradcheckArgs grd;
  CLI::App* c_grd =
      app.add_subcommand("gradcheck", "Finite-difference gradient suite");
  c_grd->add_option("--seed", grd.seed, "Base seed");
  c_grd->add_option("--seeds", grd.seeds, "Number of random seeds");
  c_grd->add_option("--corrupt", grd.corrupt,
                    "Bias added to analytic gradients (negative control)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }

  try {
    if (*c_gen) return cmd_generate(gen);
    if (*c_san) return cmd_sanitize(san);
    if (*c_trn) return cmd_train(trn);
    if (*c_syn) return cmd_synthesize(syn);
    if (*c_eva) return cmd_evaluate(eva);
    if (*c_grd) return cmd_gradcheck(grd);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const ShapeError& e) {
    std::cerr << "shape error: " << e.what() << "\n";
    return 4;
  } catch (const VerificationError& e) {
    std::cerr << "verification error: " << e.what() << "\n";
    return 5;
  } catch (const DomainError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
