/*
 * Copyright 2026 The meshseg Authors. All rights reserved.
 * This file is licensed to you under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License. You may obtain a copy
 * of the License at http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software distributed under
 * the License is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR REPRESENTATIONS
 * OF ANY KIND, either express or implied. See the License for the specific language
 * governing permissions and limitations under the License.
 */
#pragma once

#include <meshseg/common.hpp>
#include <meshseg/detector.hpp>
#include <meshseg/eval.hpp>
#include <meshseg/fixtures.hpp>
#include <meshseg/geodesic.hpp>
#include <meshseg/image_io.hpp>
#include <meshseg/mesh.hpp>
#include <meshseg/mesh_io.hpp>
#include <meshseg/pipeline.hpp>
#include <meshseg/remote_detector.hpp>
#include <meshseg/render.hpp>
#include <meshseg/scoring.hpp>
