#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "pointscene/config.h"
#include "pointscene/workspace.h"

namespace pointscene {

struct ServiceOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  int render_workers = 2;
  std::string cors_origin = "*";
};

// Binary layout of GET /v1/cloud: 16-byte header (magic "PCLD", u32 point
// count, u64 revision) then per point x y z (f32), r g b (u8), instance
// (i32), all little-endian.
inline constexpr char kCloudMagic[5] = "PCLD";
inline constexpr size_t kCloudHeaderBytes = 16;
inline constexpr size_t kCloudRecordBytes = 19;

// HTTP front end over one mutable scene session.
//   GET    /v1/scene              metadata, views, counts, revision
//   GET    /v1/cloud              binary cloud (only_alive, max_points)
//   GET    /v1/instances          instance ids with point counts
//   POST   /v1/edits              apply an EditOp
//   DELETE /v1/edits/last         undo by replaying all but the last op
//   POST   /v1/render             {camera | view_id, backend} -> 202 job id
//   GET    /v1/render/<id>        202 status while pending, PNG when done
//   GET    /v1/views/<id>/rgb     input view image
// Every response carries X-Scene-Revision; edits bump it by one.
class SceneService {
 public:
  SceneService(SceneState state, PipelineConfig config,
               std::filesystem::path workspace, ServiceOptions options);
  ~SceneService();
  SceneService(const SceneService&) = delete;
  SceneService& operator=(const SceneService&) = delete;

  // Binds and serves on a background thread. Returns the bound port.
  // Throws kIo when the address cannot be bound.
  int Start();
  // Stops serving, drains render workers and writes edits.json into the
  // workspace (when one is set). Safe to call more than once.
  void Stop();

  uint64_t revision() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace pointscene
