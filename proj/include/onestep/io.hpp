#pragma once
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include <onestep/dataset.hpp>

namespace onestep {

struct IngestManifest
{
    std::string path;
    std::string response;
    int rows = 0;
    std::vector<std::string> columns;  // predictors kept, in file order
    std::vector<std::string> dropped;  // constant predictors removed
    std::vector<std::string> warnings;
};

struct Ingested
{
    Dataset data;
    IngestManifest manifest;
};

// Reads a headed, comma-separated numeric file. Row numbers in errors count data rows from 1.
Ingested ingest_csv(const std::filesystem::path& path, const std::string& response,
                    Likelihood family = Likelihood::Gaussian);

nlohmann::ordered_json to_json(const IngestManifest& manifest);

// Pretty JSON text terminated by a newline.
std::string dump_json(const nlohmann::ordered_json& j);

// Creates the directory if needed; failures raise ValidationError.
void ensure_directory(const std::filesystem::path& dir);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

} // namespace onestep
