#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "tdvs/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Desk-scale direct visual servoing toolkit for a tendon-driven continuum robot"};
  app.require_subcommand(1);

  struct Args {
    std::string config;
    std::string out;
  };

  auto add_common = [](CLI::App* cmd, Args& args) {
    cmd->add_option("--config", args.config, "configuration file (key = value lines)")->required();
    cmd->add_option("--out", args.out, "output directory")->required();
  };

  Args gen_args, train_args, servo_args, eval_args;
  CLI::App* gen = app.add_subcommand("gen-dataset", "render the spiral-path training dataset");
  add_common(gen, gen_args);
  CLI::App* train = app.add_subcommand("train", "train the regressor on a generated dataset");
  add_common(train, train_args);
  CLI::App* servo = app.add_subcommand("servo", "run one closed-loop servo episode");
  add_common(servo, servo_args);
  CLI::App* eval = app.add_subcommand("eval", "sweep servo runs over starts and seeds");
  add_common(eval, eval_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : tdvs::ExitCode::kConfigError;
  }

  if (gen->parsed()) return tdvs::cmd_gen_dataset(gen_args.config, gen_args.out, std::cout);
  if (train->parsed()) return tdvs::cmd_train(train_args.config, train_args.out, std::cout);
  if (servo->parsed()) return tdvs::cmd_servo(servo_args.config, servo_args.out, std::cout);
  if (eval->parsed()) return tdvs::cmd_eval(eval_args.config, eval_args.out, std::cout);
  return tdvs::ExitCode::kConfigError;
}
