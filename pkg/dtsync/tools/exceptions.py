# Copyright (c) 2021-2024  The University of Texas Southwestern Medical Center.
# All rights reserved.

# Redistribution and use in source and binary forms, with or without
# modification, are permitted for academic and research use only (subject to the
# limitations in the disclaimer below) provided that the following conditions are met:

#      * Redistributions of source code must retain the above copyright notice,
#      this list of conditions and the following disclaimer.

#      * Redistributions in binary form must reproduce the above copyright
#      notice, this list of conditions and the following disclaimer in the
#      documentation and/or other materials provided with the distribution.

#      * Neither the name of the copyright holders nor the names of its
#      contributors may be used to endorse or promote products derived from this
#      software without specific prior written permission.

# NO EXPRESS OR IMPLIED LICENSES TO ANY PARTY'S PATENT RIGHTS ARE GRANTED BY
# THIS LICENSE. THIS SOFTWARE IS PROVIDED BY THE COPYRIGHT HOLDERS AND
# CONTRIBUTORS "AS IS" AND ANY EXPRESS OR IMPLIED WARRANTIES, INCLUDING, BUT NOT
# LIMITED TO, THE IMPLIED WARRANTIES OF MERCHANTABILITY AND FITNESS FOR A
# PARTICULAR PURPOSE ARE DISCLAIMED. IN NO EVENT SHALL THE COPYRIGHT HOLDER OR
# CONTRIBUTORS BE LIABLE FOR ANY DIRECT, INDIRECT, INCIDENTAL, SPECIAL,
# EXEMPLARY, OR CONSEQUENTIAL DAMAGES (INCLUDING, BUT NOT LIMITED TO,
# PROCUREMENT OF SUBSTITUTE GOODS OR SERVICES; LOSS OF USE, DATA, OR PROFITS; OR
# BUSINESS INTERRUPTION) HOWEVER CAUSED AND ON ANY THEORY OF LIABILITY, WHETHER
# IN CONTRACT, STRICT LIABILITY, OR TORT (INCLUDING NEGLIGENCE OR OTHERWISE)
# ARISING IN ANY WAY OUT OF THE USE OF THIS SOFTWARE, EVEN IF ADVISED OF THE
# POSSIBILITY OF SUCH DAMAGE.

"""Exception hierarchy shared by every dtsync module."""


class DtsyncError(Exception):
    """Base class for all errors raised by dtsync."""


class DomainError(DtsyncError, ValueError):
    """A formula was evaluated outside of its admissible domain."""


class ContractViolation(DtsyncError, RuntimeError):
    """An API was called in a way its contract forbids.

    Examples are raw actions outside of (-1, 1), stepping an environment whose
    episode is already done, or feeding a network an input of the wrong width.
    """


class ConfigError(DtsyncError, ValueError):
    """An experiment configuration could not be parsed or validated."""

    def __init__(self, message, line=None):
        """Initialize the error.

        Parameters
        ----------
        message : str
            Human readable description of the problem.
        line : int, optional
            1-based line number of the offending key in the source file.
        """
        #: int: 1-based line of the offending key, if known.
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class CheckpointError(DtsyncError):
    """A checkpoint is unreadable or does not match the expected network."""


class TrainingDivergedError(DtsyncError, ArithmeticError):
    """A loss or a parameter update became non-finite during training."""
