#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "expcli/pipeline.hpp"

using namespace vlnlab;

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("-c,--config", args.config_path, "JSON config file");
  cmd->add_option("-s,--set", args.overrides,
                  "override: section.key=value (repeatable)");
  cmd->add_option("-o,--out", args.out_dir, "output directory");
}

cli::RunConfig make_config(const CommonArgs& args) {
  auto overrides = args.overrides;
  if (!args.out_dir.empty()) overrides.push_back("output_dir=" + args.out_dir);
  return cli::load_config(args.config_path, overrides);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vlnlab: graph-world navigation lab with a sub-instruction "
               "translator"};
  app.require_subcommand(1);

  CommonArgs gen_worlds_args, gen_syfis_args, pretrain_args, train_args,
      eval_args, translate_args, report_args;
  std::string translate_record;

  add_common(app.add_subcommand("gen-worlds",
                                "generate seen/unseen graph worlds"),
             gen_worlds_args);
  add_common(app.add_subcommand("gen-syfis",
                                "synthesize the contrastive sub-instruction "
                                "dataset"),
             gen_syfis_args);
  add_common(app.add_subcommand("pretrain-translator",
                                "train the translator on the dataset"),
             pretrain_args);
  add_common(app.add_subcommand("train-agent",
                                "train the navigation agent (optionally with "
                                "the translator)"),
             train_args);
  add_common(app.add_subcommand("evaluate",
                                "greedy inference over both splits, metrics "
                                "per episode"),
             eval_args);
  auto* translate_cmd = app.add_subcommand(
      "translate", "decode one dataset record through the translator");
  add_common(translate_cmd, translate_args);
  translate_cmd->add_option("-r,--record", translate_record, "record id")
      ->required();
  add_common(app.add_subcommand("report", "aggregate metrics into tables"),
             report_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("gen-worlds")) {
      cli::cmd_gen_worlds(make_config(gen_worlds_args));
    } else if (app.got_subcommand("gen-syfis")) {
      const auto stats = cli::cmd_gen_syfis(make_config(gen_syfis_args));
      std::cout << stats.to_json() << '\n';
    } else if (app.got_subcommand("pretrain-translator")) {
      const auto report =
          cli::cmd_pretrain_translator(make_config(pretrain_args));
      std::cout << "pretrain final loss " << report.final_total
                << " heldout token accuracy " << report.heldout_token_accuracy
                << " D(a,p) " << report.heldout_mean_d_positive
                << " D(a,hard) " << report.heldout_mean_d_hard << '\n';
    } else if (app.got_subcommand("train-agent")) {
      cli::cmd_train_agent(make_config(train_args));
    } else if (app.got_subcommand("evaluate")) {
      const auto summary = cli::cmd_evaluate(make_config(eval_args));
      for (const auto& [split, s] : summary) {
        std::cout << split << ": NE " << s.agg.ne << " SR " << s.agg.sr
                  << " SPL " << s.agg.spl << " CLS " << s.agg.cls << " sDTW "
                  << s.agg.sdtw;
        if (s.split_mask_f1 >= 0.0)
          std::cout << " splitF1 " << s.split_mask_f1;
        std::cout << '\n';
      }
    } else if (app.got_subcommand("translate")) {
      std::cout << cli::cmd_translate(make_config(translate_args),
                                      translate_record)
                << '\n';
    } else if (app.got_subcommand("report")) {
      cli::cmd_report(make_config(report_args));
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.category() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
