#!/usr/bin/env python3
########################################################################
# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: MIT-0
########################################################################

from unimoco.cli import main


if __name__ == '__main__':
    main()
