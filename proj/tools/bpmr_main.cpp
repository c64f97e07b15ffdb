// bpmr command-line tool: prepare / train / retarget / eval / attn-viz.

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "bpmr/cli/commands.hpp"

namespace {

std::string run_root() {
  const char* env = std::getenv("BPMR_RUN_ROOT");
  return env ? env : ".";
}

std::string under_root(const std::string& p) {
  if (p.empty() || p.front() == '/') return p;
  return (std::filesystem::path(run_root()) / p).string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Body-part motion retargeting pipeline"};
  app.require_subcommand(1);

  // prepare
  std::string manifest, partition = "humanoid6", out;
  int clip_len = 64;
  auto* prepare = app.add_subcommand("prepare", "Localize, window, and normalize a BVH corpus");
  prepare->add_option("--manifest", manifest, "dataset manifest JSON")->required();
  prepare->add_option("--partition", partition, "partition preset name or config path");
  prepare->add_option("--out", out, "output dataset directory")->required();
  prepare->add_option("--clip-len", clip_len, "frames per clip (default 64)");

  // train
  std::string data_a, data_b, run_dir, resume, mode = "humanoid", adv = "standard";
  bpmr::TrainConfig tcfg;
  bpmr::ModelConfig mcfg;
  int steps_per_epoch = 1, checkpoint_every = 0;
  auto* train = app.add_subcommand("train", "Run the cyclic-adversarial training loop");
  train->add_option("--data-a", data_a, "prepared dataset of structure A")->required();
  train->add_option("--data-b", data_b, "prepared dataset of structure B")->required();
  train->add_option("--run-dir", run_dir, "run directory for logs and checkpoints")->required();
  train->add_option("--epochs", tcfg.epochs, "training epochs");
  train->add_option("--steps-per-epoch", steps_per_epoch, "train steps per epoch");
  train->add_option("--batch-size", tcfg.batch_size, "clips per batch");
  train->add_option("--lr", tcfg.lr, "Adam learning rate");
  train->add_option("--seed", tcfg.seed, "RNG seed");
  train->add_option("--mode", mode, "humanoid | biped_quad");
  train->add_option("--adv-convention", adv, "standard | paper_literal");
  train->add_option("--checkpoint-every", checkpoint_every, "steps between checkpoints");
  train->add_option("--resume", resume, "checkpoint to resume from");
  train->add_option("--model-d", mcfg.d, "token/embedding dimension");
  train->add_option("--model-h-embed", mcfg.h_embed, "embedding MLP width");
  train->add_option("--model-h-conv", mcfg.h_conv, "per-part conv width");
  train->add_option("--model-h-dec", mcfg.h_dec, "decoder conv width");

  // retarget
  std::string ckpt, input_bvh, source_id, target_id, out_bvh, target_skel;
  int fps = 30;
  auto* retarget = app.add_subcommand("retarget", "Retarget a BVH file onto another structure");
  retarget->add_option("--checkpoint", ckpt, "trained checkpoint")->required();
  retarget->add_option("--in", input_bvh, "input BVH")->required();
  retarget->add_option("--source", source_id, "source structure id")->required();
  retarget->add_option("--target", target_id, "target structure id")->required();
  retarget->add_option("--out", out_bvh, "output BVH")->required();
  retarget->add_option("--target-skeleton", target_skel, "BVH providing target offsets");
  retarget->add_option("--fps", fps, "working frame rate");

  // eval
  std::string eval_ckpt, eval_a, eval_b, eval_out;
  int fid_steps = 200;
  std::uint64_t eval_seed = 0;
  auto* eval = app.add_subcommand("eval", "Compute MPJPE / contact recall / FID");
  eval->add_option("--checkpoint", eval_ckpt, "trained checkpoint")->required();
  eval->add_option("--data-a", eval_a, "prepared dataset of structure A")->required();
  eval->add_option("--data-b", eval_b, "prepared dataset of structure B")->required();
  eval->add_option("--out", eval_out, "report directory")->required();
  eval->add_option("--fid-steps", fid_steps, "FID autoencoder training steps");
  eval->add_option("--seed", eval_seed, "RNG seed");

  // attn-viz
  std::string attn_ckpt, attn_data, attn_structure, attn_out;
  int attn_clips = 1;
  auto* attn = app.add_subcommand("attn-viz", "Export attention heatmaps");
  attn->add_option("--checkpoint", attn_ckpt, "trained checkpoint")->required();
  attn->add_option("--data", attn_data, "prepared dataset")->required();
  attn->add_option("--structure", attn_structure, "structure id")->required();
  attn->add_option("--out", attn_out, "output directory")->required();
  attn->add_option("--clips", attn_clips, "number of clips to render");

  CLI11_PARSE(app, argc, argv);

  tcfg.mode = mode;
  try {
    tcfg.adv_convention = bpmr::adv_convention_from_string(adv);
  } catch (const std::exception& e) {
    std::cerr << "ERROR:CONFIG: " << e.what() << "\n";
    return 1;
  }

  if (prepare->parsed())
    return bpmr::cli::cmd_prepare(manifest, partition, under_root(out), clip_len, std::cout,
                                  std::cerr);
  if (train->parsed())
    return bpmr::cli::cmd_train(data_a, data_b, under_root(run_dir), mcfg, tcfg, steps_per_epoch,
                                checkpoint_every, resume, std::cout, std::cerr);
  if (retarget->parsed())
    return bpmr::cli::cmd_retarget(ckpt, input_bvh, source_id, target_id, out_bvh, target_skel,
                                   fps, std::cout, std::cerr);
  if (eval->parsed())
    return bpmr::cli::cmd_eval(eval_ckpt, eval_a, eval_b, under_root(eval_out), fid_steps,
                               eval_seed, std::cout, std::cerr);
  if (attn->parsed())
    return bpmr::cli::cmd_attn(attn_ckpt, attn_data, attn_structure, under_root(attn_out),
                               attn_clips, std::cout, std::cerr);
  return 1;
}
