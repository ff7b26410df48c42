# -*- coding: utf-8 -*-
#
# This file is part of Divsamp.
#
# Divsamp is free software: you can redistribute it and/or modify it
# under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# Divsamp is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with Divsamp.  If not, see <http://www.gnu.org/licenses/>.

"""
Module handling the console interface
"""

import logging
from shutil import get_terminal_size
import sys

class DummyUI(object):
    """
    Interface displaying nothing, for library use and tests
    """
    task = None

    def update(self):
        return

class Formatter(logging.Formatter):
    """
    Formatter displaying debug and info messages normally, and messages with
    level warning and above with their levelname
    """
    def __init__(self):
        logging.Formatter.__init__(self)
        self.formatter = logging.Formatter('%(message)s')
        self.warning_formatter = logging.Formatter('%(levelname)-8s : %(message)s')

    def format(self, record):
        if record.levelno > logging.INFO:
            return self.warning_formatter.format(record)
        return self.formatter.format(record)

class UI(logging.Handler):
    """
    Handler displaying the logging messages and the progress bar of the
    running task

    Attrs:
        task: Object with current and total attributes (e.g. a trainer), or
            None; its optional status string is shown after the percentage
        stream: The output stream
    """
    def __init__(self, stream=None):
        logging.Handler.__init__(self, logging.INFO)
        self.setFormatter(Formatter())

        logger = logging.getLogger("divsamp")
        logger.addHandler(self)

        self.task = None
        self.stream = stream or sys.stdout

        self.current = 0
        self.total = 0
        self.status = ""
        self.progressbar = ""
        self.width = 0

    def emit(self, record):
        message = self.format(record).split("\n", 1)

        self.update_bar()

        # Overwrite the progress bar with the first line of the message
        self.stream.write("\r")
        self.stream.write(message[0])
        self.stream.write(" "*(self.width - len(message[0])))

        if len(message) > 1:
            self.stream.write("\n")
            self.stream.write(message[1])

        if self.progressbar:
            self.stream.write("\n")
            self.stream.write(self.progressbar)
        else:
            self.stream.write("\n")
        self.stream.flush()

    def update_bar(self):
        """
        Update the progress bar without displaying it

        Returns
            bool: True if the progress bar changed and should be redrawn
        """
        changed = False

        width, _ = get_terminal_size()

        # Drawing at the end of the row will create a newline on windows
        width -= 1

        if width != self.width:
            self.width = width
            changed = True

        if self.task is not None:
            current = self.task.current
            total = self.task.total
            status = getattr(self.task, "status", "")
        else:
            current = 0
            total = 0
            status = ""

        if self.current != current or self.total != total or self.status != status:
            self.current = current
            self.total = total
            self.status = status
            changed = True

        if not changed or total == 0:
            if total == 0 and self.progressbar:
                self.progressbar = ""
                return True
            return False

        suffix = " " + status if status else ""

        # Leave space for two brackets, one space, four characters for the
        # percentage, and the status of the task
        barsize = max(self.width - 7 - len(suffix), 0)
        completedsize = min(current * barsize // total, barsize)
        progress = min(current * 100 // total, 100)

        progressbar = "[{}{}] {:3}%{}".format("#"*completedsize, " "*(barsize - completedsize),
                                              progress, suffix)
        if progressbar != self.progressbar:
            self.progressbar = progressbar
            return True
        return False

    def update(self):
        """
        Update and display the progress bar
        """
        if self.update_bar() and self.progressbar:
            self.stream.write("\r")
            self.stream.write(self.progressbar)
            self.stream.flush()

    def close(self):
        if self.progressbar:
            self.stream.write("\n")
            self.stream.flush()
            self.progressbar = ""
        logging.getLogger("divsamp").removeHandler(self)
        logging.Handler.close(self)
