#include <cstdio>
#include "render.h"
#include "geometry.h"

namespace render {

Scene load_scene(const char* path) {
  Scene s;
  //$ open the file
  std::FILE* f = std::fopen(path, "r");
  //$ [could not open]
  if (!f) {
    return s;
  }
  //$1 parse one object per line
  while (read_object(f, s)) {
  }
  std::fclose(f);
  return s;
}

void report(const char* what) {
  //$ print the message
  std::printf("%s\n", what);
}

void draw(const Scene& s) {
  for (const Object& o : s.objects) {
    //$ depth of the object
    double d = geo::distance(s.camera, o.position);  //$
    //$1 rasterize at that depth
    rasterize(o, d);
  }
}

}  // namespace render
