// Copyright (C) 2026 The vides Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "support.hpp"
#include "vides/codec.hpp"
#include "vides/error.hpp"
#include "vides/hash.hpp"
#include "vides/store.hpp"

using namespace vides;
using testing_support::TempDir;

TEST(Store, BlobsAreContentAddressed) {
    TempDir dir("store");
    Store s(dir.path());
    const auto png = encode_png(testing_support::noise_image(8, 8, 1));
    const auto h1 = s.put_blob(png);
    const auto h2 = s.put_blob(png);
    EXPECT_EQ(h1, h2);
    EXPECT_EQ(h1, sha256_hex(png));
    EXPECT_EQ(s.blob_count(), 1u);
    EXPECT_EQ(s.get_blob(h1), png);
    EXPECT_EQ(s.blob_path(h1).parent_path().filename(), h1.substr(0, 2));
    EXPECT_THROW(s.get_blob(std::string(64, '0')), StorageError);
}

TEST(Store, CorruptBlobDetected) {
    TempDir dir("store");
    Store s(dir.path());
    const auto h = s.put_blob(encode_png(Image(4, 4, 1, 3)));
    write_file_atomic(s.blob_path(h), std::vector<std::uint8_t>{1, 2, 3});
    EXPECT_THROW(s.get_blob(h), StorageError);
}

TEST(Store, TwoIdenticalImagesOneBlob) {
    TempDir dir("store");
    Store s(dir.path());
    const auto p = s.create_project("demo");
    const auto png = encode_png(Image(8, 8, 3, 50));
    const auto a = s.add_image(p.project_id, ImageRole::generated, std::nullopt, std::nullopt, png, 8, 8);
    const auto b = s.add_image(p.project_id, ImageRole::generated, std::nullopt, std::nullopt, png, 8, 8);
    EXPECT_NE(a.image_id, b.image_id);
    EXPECT_EQ(a.blob, b.blob);
    EXPECT_EQ(s.blob_count(), 1u);
    const auto proj = s.get_project(p.project_id);
    ASSERT_TRUE(proj);
    ASSERT_EQ(proj->images.size(), 2u);
    EXPECT_EQ(proj->images[0].image_id, a.image_id);
}

TEST(Store, LineageAndSoftDelete) {
    TempDir dir("store");
    Store s(dir.path());
    const auto p = s.create_project("demo");
    const auto png = encode_png(Image(8, 8, 3, 1));
    const auto root = s.add_image(p.project_id, ImageRole::uploaded, std::nullopt, std::nullopt, png, 8, 8);
    const auto child = s.add_image(p.project_id, ImageRole::generated, root.image_id, "job_x", png, 8, 8);
    EXPECT_EQ(*s.get_image(child.image_id)->parent_image_id, root.image_id);
    EXPECT_EQ(*s.get_image(child.image_id)->job_id, "job_x");
    EXPECT_TRUE(s.delete_image(root.image_id));
    EXPECT_FALSE(s.delete_image(root.image_id));
    EXPECT_FALSE(s.get_image(root.image_id));
    EXPECT_EQ(*s.get_image(child.image_id)->parent_image_id, root.image_id);
    EXPECT_EQ(s.get_project(p.project_id)->images.size(), 1u);
    EXPECT_THROW(s.add_image(p.project_id, ImageRole::generated, "img_missing", std::nullopt, png, 8, 8),
                 NotFoundError);
    EXPECT_THROW(s.add_image("prj_missing", ImageRole::uploaded, std::nullopt, std::nullopt, png, 8, 8),
                 NotFoundError);
}

TEST(Store, JobsPersistAcrossReopen) {
    TempDir dir("store");
    DesignJob job;
    job.job_id = make_id("job");
    job.kind = JobKind::edit;
    job.prompt = "oak table";
    job.seed = 77;
    job.mask = "msk_1";
    job.created_at = job.updated_at = "2026-01-01T00:00:00.000Z";
    {
        Store s(dir.path());
        const auto p = s.create_project("x");
        s.insert_job(job, p.project_id);
        job.advance(JobStatus::running);
        s.update_job(job);
    }
    Store s(dir.path());
    const auto back = s.get_job(job.job_id);
    ASSERT_TRUE(back);
    EXPECT_EQ(back->status, JobStatus::running);
    EXPECT_EQ(back->prompt, "oak table");
    EXPECT_EQ(back->seed, 77u);
    EXPECT_EQ(*back->mask, "msk_1");
    EXPECT_EQ(s.jobs_with_status(JobStatus::running).size(), 1u);
    EXPECT_TRUE(s.jobs_with_status(JobStatus::queued).empty());
    EXPECT_TRUE(s.job_project(job.job_id));
    EXPECT_FALSE(s.get_job("job_nope"));
}

TEST(Store, Masks) {
    TempDir dir("store");
    Store s(dir.path());
    const auto png = encode_png(Image(8, 8, 1, 0));
    const auto img = s.add_image(std::nullopt, ImageRole::uploaded, std::nullopt, std::nullopt, png, 8, 8);
    const auto mimg = s.add_image(std::nullopt, ImageRole::mask, img.image_id, std::nullopt, png, 8, 8);
    const auto m = s.add_mask(img.image_id, mimg.image_id, Json{{"area_fraction", 0.0}});
    const auto back = s.get_mask(m.mask_id);
    ASSERT_TRUE(back);
    EXPECT_EQ(back->mask_image_id, mimg.image_id);
    EXPECT_EQ(back->metadata["area_fraction"], 0.0);
}

TEST(Store, Ids) {
    const auto id = make_id("img");
    EXPECT_EQ(id.rfind("img_", 0), 0u);
    EXPECT_EQ(id.size(), 28u);
    EXPECT_NE(id, make_id("img"));
    EXPECT_EQ(parse_image_role(to_string(ImageRole::condition)), ImageRole::condition);
}
