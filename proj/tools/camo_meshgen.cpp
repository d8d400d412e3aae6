// Writes the procedural fixture meshes used by the tests and the demo pipeline.
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "camo/geometry/fixtures.hpp"
#include "camo/geometry/obj_io.hpp"

int main(int argc, char** argv) {
  CLI::App app{"camo_meshgen: write fixture meshes as Wavefront OBJ"};
  std::filesystem::path out_dir = ".";
  app.add_option("-o,--out", out_dir, "output directory");
  CLI11_PARSE(app, argc, argv);

  std::filesystem::create_directories(out_dir);
  camo::obj::save(camo::fixtures::hemisphere(), out_dir / "hemisphere.obj");
  camo::obj::save(camo::fixtures::door_panel(), out_dir / "door.obj");
  camo::obj::save(camo::fixtures::car(), out_dir / "car.obj");
  camo::obj::save(camo::fixtures::unit_triangle(), out_dir / "unit_triangle.obj");
  std::cout << "wrote fixtures to " << out_dir << "\n";
  return 0;
}
