// Writes the synthetic lane-following dataset used for training as JSONL.
#include <CLI11.hpp>

#include <iostream>

#include "jointplan/errors.hpp"
#include "jointplan/io.hpp"
#include "jointplan/learning.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Synthetic lane-following training scenes", "make_synthetic_dataset"};
  jointplan::SyntheticDatasetOptions opt;
  std::string out = "dataset.jsonl";
  app.add_option("--out", out, "Output file");
  app.add_option("--examples", opt.num_examples, "Number of scenes");
  app.add_option("--actors", opt.num_actors, "Vehicles per scene, ego included");
  app.add_option("--horizon", opt.horizon_steps, "Future waypoints, t = 0 included");
  app.add_option("--dt", opt.dt, "Seconds between waypoints");
  app.add_option("--seed", opt.seed, "Seed");
  CLI11_PARSE(app, argc, argv);
  try {
    jointplan::io::write_file(out, jointplan::io::dataset_to_jsonl(jointplan::synthesize_dataset(opt)));
  } catch (const jointplan::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  std::cout << "wrote " << opt.num_examples << " examples to " << out << "\n";
  return 0;
}
